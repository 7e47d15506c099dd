// Copyright 2026 The ppgpr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace ppgpr {

// Value does not fit the fixed-point range of the codec.
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

// A party deviated from the expected message flow, or a single-use value
// was consumed twice.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Transport failure: closed channel, timeout, socket error.
class TransportError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

// A party asked for offline material that the pool cannot provide.
class OfflineUnderrun : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ppgpr
