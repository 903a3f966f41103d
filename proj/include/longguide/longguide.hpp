#pragma once

#include "longguide/analysis.hpp"
#include "longguide/backend.hpp"
#include "longguide/bundle.hpp"
#include "longguide/catalog.hpp"
#include "longguide/config.hpp"
#include "longguide/dataset.hpp"
#include "longguide/error.hpp"
#include "longguide/evaluate.hpp"
#include "longguide/guidelines.hpp"
#include "longguide/http_backend.hpp"
#include "longguide/judge.hpp"
#include "longguide/pipeline.hpp"
#include "longguide/probe.hpp"
#include "longguide/prompts.hpp"
#include "longguide/refmetrics.hpp"
#include "longguide/selector.hpp"
#include "longguide/textstat.hpp"
