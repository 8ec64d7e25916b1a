// Copyright (c) the ICAE Project Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace icae {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

// Writes through a sibling temporary file renamed into place; a failed
// write leaves nothing at `path`.
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace icae
