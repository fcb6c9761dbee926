/* Copyright 2026 the egap authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef EGAP_ERROR_HPP
#define EGAP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace egap {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (bad magic, truncation, inconsistent lengths).
class ParseError : public Error {
public:
  using Error::Error;
};

/// Corrupt or exhausted bitstream, or a symbol outside its table's support.
class CodingError : public Error {
public:
  using Error::Error;
};

/// Invalid parameters or a violated call contract.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Filesystem failure.
class IoError : public Error {
public:
  using Error::Error;
};

} // namespace egap

#endif
