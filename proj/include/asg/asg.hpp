// Copyright 2026 The ASG Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Everything in one include.

#pragma once

#include "asg/alignment_losses.hpp"
#include "asg/anatomy_ontology.hpp"
#include "asg/arsa_pairing.hpp"
#include "asg/error.hpp"
#include "asg/grad_check.hpp"
#include "asg/io.hpp"
#include "asg/matrix.hpp"
#include "asg/parallel.hpp"
#include "asg/region_geometry.hpp"
#include "asg/report_parsing.hpp"
#include "asg/rng.hpp"
#include "asg/strong_string.hpp"
#include "asg/tag_decoder.hpp"
#include "asg/pipeline/checks.hpp"
#include "asg/pipeline/commands.hpp"
#include "asg/pipeline/config.hpp"
#include "asg/pipeline/embeddings.hpp"
#include "asg/pipeline/run_report.hpp"
#include "asg/pipeline/synthetic.hpp"
