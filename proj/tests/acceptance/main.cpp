// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "acceptance/criteria.hpp"

int main() { return lmp::acceptance::run_all(std::cout) ? 0 : 1; }
