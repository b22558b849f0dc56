// SPDX-License-Identifier: Apache-2.0
//
// risofdm: link-level simulation of RIS-aided OFDM links
// Copyright (C) 2026 The risofdm authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "risofdm/channel.hpp"
#include "risofdm/config.hpp"
#include "risofdm/configuration.hpp"
#include "risofdm/error.hpp"
#include "risofdm/harness.hpp"
#include "risofdm/kvconfig.hpp"
#include "risofdm/metrics.hpp"
#include "risofdm/nnconf.hpp"
#include "risofdm/scene.hpp"
#include "risofdm/text.hpp"
