#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>

#include <spdlog/spdlog.h>

int main(int argc, char** argv) {
  if (!std::getenv("SARA_LOG")) spdlog::set_level(spdlog::level::off);
  doctest::Context context(argc, argv);
  return context.run();
}
