// Copyright 2026 The kstone Authors.
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

#ifndef KSTONE_ERRORS_HPP_
#define KSTONE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace kstone {

// Base of every error raised by the library. Callers that only need to know
// "something in kstone failed" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define KSTONE_DEFINE_ERROR(Name)   \
  class Name : public Error {       \
   public:                          \
    using Error::Error;             \
  }

// imaging
KSTONE_DEFINE_ERROR(DecodeError);
KSTONE_DEFINE_ERROR(UnsupportedFormat);
KSTONE_DEFINE_ERROR(DegenerateBox);
KSTONE_DEFINE_ERROR(EmptyCrop);
KSTONE_DEFINE_ERROR(IoError);

// inference
KSTONE_DEFINE_ERROR(BackendError);
KSTONE_DEFINE_ERROR(ShapeMismatch);

// eval / dataprep / config
KSTONE_DEFINE_ERROR(MissingLabel);
KSTONE_DEFINE_ERROR(DuplicateStem);
KSTONE_DEFINE_ERROR(SubjectLeak);
KSTONE_DEFINE_ERROR(ConfigError);

#undef KSTONE_DEFINE_ERROR

}  // namespace kstone

#endif  // KSTONE_ERRORS_HPP_
