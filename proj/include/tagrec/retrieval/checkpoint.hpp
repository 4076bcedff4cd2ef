// Copyright 2026 The tagrec Authors.
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

// Binary model checkpoints.
//
// Layout, all integers little-endian:
//   "TAGRECTT"  u32 version  u32 emb_dim  u32 out_dim
//   u32 table count, then u32 rows per table (item tables, user, token)
//   u32 metadata length, metadata JSON (config, vocabularies, buckets)
//   u32 tensor count, then per tensor: u16 name length, name,
//   u64 value count, float32 values in row-major order.

#ifndef TAGREC_RETRIEVAL_CHECKPOINT_HPP_
#define TAGREC_RETRIEVAL_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "tagrec/retrieval/model.hpp"

namespace tagrec::retrieval {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_model(const TriTowerModel& model);
// Throws ValidationError on a bad magic, version, header or truncation.
TriTowerModel deserialize_model(const std::string& bytes);

void save_checkpoint(const TriTowerModel& model, const std::filesystem::path& path);
TriTowerModel load_checkpoint(const std::filesystem::path& path);

}  // namespace tagrec::retrieval

#endif  // TAGREC_RETRIEVAL_CHECKPOINT_HPP_
