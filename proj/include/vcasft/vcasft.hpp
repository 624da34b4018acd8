#pragma once

#include "vcasft/augmentation.hpp"
#include "vcasft/captioning.hpp"
#include "vcasft/corpus.hpp"
#include "vcasft/errors.hpp"
#include "vcasft/gateway.hpp"
#include "vcasft/io.hpp"
#include "vcasft/metrics.hpp"
#include "vcasft/pipeline.hpp"
#include "vcasft/predictions.hpp"
#include "vcasft/prompting.hpp"
#include "vcasft/prompts.hpp"
#include "vcasft/report.hpp"
#include "vcasft/text.hpp"
#include "vcasft/text_metrics.hpp"
#include "vcasft/training.hpp"
