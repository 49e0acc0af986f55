// Copyright 2026 The Proftree Authors
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

#ifndef PROFTREE_PATTERN_H_
#define PROFTREE_PATTERN_H_

#include <string>
#include <string_view>
#include <vector>

namespace proftree {

// Shell-style match supporting '*' and '?'. Case-sensitive, whole string.
bool GlobMatch(std::string_view pattern, std::string_view text);

// A list of region-name patterns. A pattern containing '*' or '?' is a glob
// over the whole name; any other pattern matches as a substring.
class PatternSet {
 public:
  PatternSet() = default;
  explicit PatternSet(std::vector<std::string> patterns);

  bool Matches(std::string_view name) const;
  bool empty() const { return patterns_.empty(); }
  const std::vector<std::string>& patterns() const { return patterns_; }

 private:
  std::vector<std::string> patterns_;
};

}  // namespace proftree

#endif  // PROFTREE_PATTERN_H_
