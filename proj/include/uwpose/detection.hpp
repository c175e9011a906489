// Copyright 2026 The uwpose Authors.
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

#pragma once

#include <string>

#include "uwpose/image.hpp"

namespace uwpose {

// One 2D detection. frame_id ties it to an image when detections of a whole
// dataset are pooled (AP computation).
struct Detection {
  std::string class_id;
  BBox bbox;
  double score = 1.0;
  int frame_id = 0;

  // Throws std::invalid_argument unless x_min < x_max, y_min < y_max and
  // score lies in [0, 1].
  void validate() const;
};

}  // namespace uwpose
