#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  // stdout carries results; logs go to stderr.
  spdlog::set_default_logger(spdlog::stderr_color_mt("cartosearch"));
  return cartosearch::cli::run(argc, argv, std::cout, std::cerr);
}
