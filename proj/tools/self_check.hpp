/* Copyright 2026 The MNeT Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef MNET_TOOLS_SELF_CHECK_HPP_
#define MNET_TOOLS_SELF_CHECK_HPP_

#include <ostream>

namespace mnet::tools {

// Quick invariant sweep over the coder, likelihood and codec. Prints one
// line per check and returns true when all pass.
bool RunSelfCheck(std::ostream& out, bool verbose);

}  // namespace mnet::tools

#endif  // MNET_TOOLS_SELF_CHECK_HPP_
