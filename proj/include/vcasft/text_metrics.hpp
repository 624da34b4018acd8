#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "vcasft/corpus.hpp"
#include "vcasft/errors.hpp"
#include "vcasft/text.hpp"

namespace vcasft::metrics {

struct PrfScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

namespace detail {

inline PrfScore prf(double matched, double pred_total, double truth_total) {
    PrfScore s;
    s.precision = pred_total > 0 ? matched / pred_total : 0.0;
    s.recall = truth_total > 0 ? matched / truth_total : 0.0;
    s.f1 = (s.precision + s.recall) > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

template <typename Token>
std::map<std::vector<Token>, std::size_t> ngram_counts(const std::vector<Token> &tokens, std::size_t n) {
    std::map<std::vector<Token>, std::size_t> counts;
    if (tokens.size() < n || n == 0) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        counts[std::vector<Token>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                  tokens.begin() + static_cast<std::ptrdiff_t>(i + n))]++;
    }
    return counts;
}

template <typename Token>
std::size_t clipped_overlap(const std::map<std::vector<Token>, std::size_t> &pred,
                            const std::map<std::vector<Token>, std::size_t> &truth) {
    std::size_t matched = 0;
    for (const auto &[gram, count] : pred) {
        auto it = truth.find(gram);
        if (it != truth.end()) matched += std::min(count, it->second);
    }
    return matched;
}

} // namespace detail

/// Longest common subsequence length, iterative two-row DP.
template <typename Token>
std::size_t lcs_length(const std::vector<Token> &a, const std::vector<Token> &b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> curr(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                curr[j] = prev[j - 1] + 1;
            } else {
                curr[j] = std::max(prev[j], curr[j - 1]);
            }
        }
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

/// ROUGE-N with clipped n-gram multiset overlap.
template <typename Token>
PrfScore rouge_n(const std::vector<Token> &pred, const std::vector<Token> &truth, std::size_t n) {
    if (n == 0) throw PreconditionError("rouge_n requires n >= 1");
    auto pred_counts = detail::ngram_counts(pred, n);
    auto truth_counts = detail::ngram_counts(truth, n);
    std::size_t matched = detail::clipped_overlap(pred_counts, truth_counts);
    double pred_total = pred.size() >= n ? static_cast<double>(pred.size() - n + 1) : 0.0;
    double truth_total = truth.size() >= n ? static_cast<double>(truth.size() - n + 1) : 0.0;
    return detail::prf(static_cast<double>(matched), pred_total, truth_total);
}

template <typename Token>
PrfScore rouge_l(const std::vector<Token> &pred, const std::vector<Token> &truth) {
    double lcs = static_cast<double>(lcs_length(pred, truth));
    return detail::prf(lcs, static_cast<double>(pred.size()), static_cast<double>(truth.size()));
}

inline PrfScore rouge_1(const std::string &pred, const std::string &truth) {
    return rouge_n(text::normalize_tokens(pred), text::normalize_tokens(truth), 1);
}

inline PrfScore rouge_2(const std::string &pred, const std::string &truth) {
    return rouge_n(text::normalize_tokens(pred), text::normalize_tokens(truth), 2);
}

inline PrfScore rouge_l(const std::string &pred, const std::string &truth) {
    return rouge_l(text::normalize_tokens(pred), text::normalize_tokens(truth));
}

// ---------------------------------------------------------------------------
// METEOR
// ---------------------------------------------------------------------------

struct MeteorScore {
    double precision = 0.0;
    double recall = 0.0;
    double f_mean = 0.0;
    double penalty = 0.0;
    std::size_t matches = 0;
    std::size_t chunks = 0;
    double score = 0.0;
};

namespace detail {

struct MeteorMatch {
    std::size_t pred_index;
    std::size_t truth_index;
};

/// One alignment stage: pred tokens scan the truth left to right, each taking
/// the first unmatched token its key equals.
inline void align_stage(const std::vector<std::string> &pred_keys, const std::vector<std::string> &truth_keys,
                        std::vector<bool> &pred_done, std::vector<bool> &truth_done,
                        std::vector<MeteorMatch> &matches) {
    for (std::size_t i = 0; i < pred_keys.size(); ++i) {
        if (pred_done[i]) continue;
        for (std::size_t j = 0; j < truth_keys.size(); ++j) {
            if (truth_done[j]) continue;
            if (pred_keys[i] == truth_keys[j]) {
                pred_done[i] = true;
                truth_done[j] = true;
                matches.push_back({i, j});
                break;
            }
        }
    }
}

inline std::size_t count_chunks(std::vector<MeteorMatch> matches) {
    if (matches.empty()) return 0;
    std::sort(matches.begin(), matches.end(),
              [](const MeteorMatch &a, const MeteorMatch &b) { return a.pred_index < b.pred_index; });
    std::size_t chunks = 1;
    for (std::size_t k = 1; k < matches.size(); ++k) {
        bool contiguous = matches[k].pred_index == matches[k - 1].pred_index + 1 &&
                          matches[k].truth_index == matches[k - 1].truth_index + 1;
        if (!contiguous) ++chunks;
    }
    return chunks;
}

} // namespace detail

/// Unigram METEOR with two alignment stages: exact surface match, then a stem
/// match (Porter for English, identity otherwise, so the second stage is a
/// no-op for Hindi). F_mean weights recall 9:1; the fragmentation penalty is
/// 0.5 * (chunks / matches)^3.
inline MeteorScore meteor(const std::vector<std::string> &pred, const std::vector<std::string> &truth,
                          Language language = Language::en) {
    MeteorScore s;
    if (pred.empty() || truth.empty()) return s;

    std::vector<bool> pred_done(pred.size(), false);
    std::vector<bool> truth_done(truth.size(), false);
    std::vector<detail::MeteorMatch> matches;
    detail::align_stage(pred, truth, pred_done, truth_done, matches);
    if (language == Language::en) {
        std::vector<std::string> pred_stems(pred.size());
        std::vector<std::string> truth_stems(truth.size());
        for (std::size_t i = 0; i < pred.size(); ++i) pred_stems[i] = text::porter_stem(pred[i]);
        for (std::size_t j = 0; j < truth.size(); ++j) truth_stems[j] = text::porter_stem(truth[j]);
        detail::align_stage(pred_stems, truth_stems, pred_done, truth_done, matches);
    }

    s.matches = matches.size();
    if (s.matches == 0) return s;
    double m = static_cast<double>(s.matches);
    s.precision = m / static_cast<double>(pred.size());
    s.recall = m / static_cast<double>(truth.size());
    s.f_mean = 10.0 * s.precision * s.recall / (s.recall + 9.0 * s.precision);
    s.chunks = detail::count_chunks(matches);
    double frag = static_cast<double>(s.chunks) / m;
    s.penalty = 0.5 * frag * frag * frag;
    s.score = s.f_mean * (1.0 - s.penalty);
    return s;
}

inline MeteorScore meteor(const std::string &pred, const std::string &truth,
                          Language language = Language::en) {
    return meteor(text::normalize_tokens(pred), text::normalize_tokens(truth), language);
}

// ---------------------------------------------------------------------------
// Corpus BLEU-4
// ---------------------------------------------------------------------------

struct BleuScore {
    double score = 0.0;
    double brevity_penalty = 0.0;
    std::array<double, 4> precisions{0.0, 0.0, 0.0, 0.0};
};

/// Corpus-level BLEU-4 without additive smoothing: clipped n-gram matches and
/// totals pool across all pairs before the geometric mean. Any empty
/// precision bucket zeroes the score.
inline BleuScore corpus_bleu4(const std::vector<std::vector<std::string>> &preds,
                              const std::vector<std::vector<std::string>> &truths) {
    if (preds.size() != truths.size()) {
        throw PreconditionError("corpus_bleu4: prediction and truth lists differ in length");
    }
    if (preds.empty()) {
        throw PreconditionError("corpus_bleu4: empty corpus");
    }
    BleuScore s;
    std::array<double, 4> matched{0, 0, 0, 0};
    std::array<double, 4> total{0, 0, 0, 0};
    double pred_len = 0.0;
    double truth_len = 0.0;
    for (std::size_t k = 0; k < preds.size(); ++k) {
        pred_len += static_cast<double>(preds[k].size());
        truth_len += static_cast<double>(truths[k].size());
        for (std::size_t n = 1; n <= 4; ++n) {
            auto pred_counts = detail::ngram_counts(preds[k], n);
            auto truth_counts = detail::ngram_counts(truths[k], n);
            matched[n - 1] += static_cast<double>(detail::clipped_overlap(pred_counts, truth_counts));
            if (preds[k].size() >= n) total[n - 1] += static_cast<double>(preds[k].size() - n + 1);
        }
    }
    s.brevity_penalty = pred_len >= truth_len || pred_len == 0.0
                            ? (pred_len == 0.0 ? 0.0 : 1.0)
                            : std::exp(1.0 - truth_len / pred_len);
    double log_sum = 0.0;
    for (std::size_t n = 0; n < 4; ++n) {
        s.precisions[n] = total[n] > 0 ? matched[n] / total[n] : 0.0;
        if (s.precisions[n] == 0.0) {
            s.score = 0.0;
            return s;
        }
        log_sum += std::log(s.precisions[n]);
    }
    s.score = s.brevity_penalty * std::exp(log_sum / 4.0);
    return s;
}

inline BleuScore corpus_bleu4(const std::vector<std::string> &preds, const std::vector<std::string> &truths) {
    std::vector<std::vector<std::string>> p(preds.size());
    std::vector<std::vector<std::string>> t(truths.size());
    for (std::size_t i = 0; i < preds.size(); ++i) p[i] = text::normalize_tokens(preds[i]);
    for (std::size_t i = 0; i < truths.size(); ++i) t[i] = text::normalize_tokens(truths[i]);
    return corpus_bleu4(p, t);
}

} // namespace vcasft::metrics
