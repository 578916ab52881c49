// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#pragma once

#include "podtile/chunking.hpp"
#include "podtile/corpus.hpp"
#include "podtile/embedder.hpp"
#include "podtile/error.hpp"
#include "podtile/eval.hpp"
#include "podtile/generate.hpp"
#include "podtile/pipeline.hpp"
#include "podtile/promptfmt.hpp"
#include "podtile/remote.hpp"
#include "podtile/retrieval.hpp"
#include "podtile/stats.hpp"
#include "podtile/synthetic.hpp"
#include "podtile/text.hpp"
#include "podtile/config.hpp"
#include "podtile/version.hpp"
