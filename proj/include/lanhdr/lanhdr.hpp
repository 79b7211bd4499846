/*
 * Copyright 2026 The lanhdr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "lanhdr/alignment.hpp"
#include "lanhdr/checkpoint.hpp"
#include "lanhdr/config.hpp"
#include "lanhdr/datapipe.hpp"
#include "lanhdr/error.hpp"
#include "lanhdr/feature.hpp"
#include "lanhdr/fusion.hpp"
#include "lanhdr/hallucination.hpp"
#include "lanhdr/image_io.hpp"
#include "lanhdr/inference.hpp"
#include "lanhdr/losses.hpp"
#include "lanhdr/metrics.hpp"
#include "lanhdr/model_config.hpp"
#include "lanhdr/radiometry.hpp"
#include "lanhdr/trainer.hpp"
#include "lanhdr/window.hpp"
