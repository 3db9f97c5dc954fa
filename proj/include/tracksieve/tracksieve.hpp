#pragma once

#include "tracksieve/blacklist.hpp"
#include "tracksieve/corpus_gen.hpp"
#include "tracksieve/email/document.hpp"
#include "tracksieve/email/html.hpp"
#include "tracksieve/email/mime.hpp"
#include "tracksieve/error.hpp"
#include "tracksieve/evaluation/benchmark.hpp"
#include "tracksieve/evaluation/corpus_stats.hpp"
#include "tracksieve/evaluation/metrics.hpp"
#include "tracksieve/evaluation/splits.hpp"
#include "tracksieve/evaluation/stats.hpp"
#include "tracksieve/features/features.hpp"
#include "tracksieve/features/similarity.hpp"
#include "tracksieve/features/tokens.hpp"
#include "tracksieve/ground_truth.hpp"
#include "tracksieve/learners/dataset.hpp"
#include "tracksieve/learners/linear.hpp"
#include "tracksieve/learners/model.hpp"
#include "tracksieve/learners/tree.hpp"
#include "tracksieve/learners/tuning.hpp"
#include "tracksieve/pipeline.hpp"
#include "tracksieve/rng.hpp"
#include "tracksieve/sanitizer.hpp"
#include "tracksieve/strings.hpp"
#include "tracksieve/time.hpp"
