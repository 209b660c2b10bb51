// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "mxrot_cli.hpp"

int main(int argc, char** argv) { return mxrot::cli::run(argc, argv, std::cout, std::cerr); }
