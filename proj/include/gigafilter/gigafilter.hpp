#pragma once

#include "gigafilter/corpus_model.hpp"
#include "gigafilter/doc_filters.hpp"
#include "gigafilter/error.hpp"
#include "gigafilter/langid.hpp"
#include "gigafilter/ordered_parallel.hpp"
#include "gigafilter/pipeline.hpp"
#include "gigafilter/sent_filters.hpp"
#include "gigafilter/stats.hpp"
#include "gigafilter/text.hpp"
#include "gigafilter/tsv_io.hpp"
#include "gigafilter/verdict.hpp"
#include "gigafilter/xent.hpp"
