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

#include "icae/error.hpp"

namespace icae {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kShapeMismatch: return "shape mismatch";
    case ErrorKind::kNonFinite: return "non-finite value";
    case ErrorKind::kAutodiff: return "autodiff misuse";
    case ErrorKind::kBadMagic: return "bad magic";
    case ErrorKind::kUnsupportedVersion: return "unsupported version";
    case ErrorKind::kSegmentOverrun: return "segment length overrun";
    case ErrorKind::kIncompleteStream: return "incomplete stream";
    case ErrorKind::kCorruptStream: return "corrupt stream";
    case ErrorKind::kModelMismatch: return "model mismatch";
    case ErrorKind::kAlphaUnsupported: return "alpha channel unsupported";
    case ErrorKind::kUnsupportedFormat: return "unsupported format";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kConfig: return "invalid configuration";
    case ErrorKind::kChecksum: return "checksum mismatch";
  }
  return "unknown error";
}

}  // namespace icae
