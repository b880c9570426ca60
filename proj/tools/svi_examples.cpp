// Writes the bundled problem files: svi_examples [output-directory] (default: problems).

#include <filesystem>
#include <iostream>

#include "svi/problem_io.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "problems";
  try {
    std::filesystem::create_directories(dir);
    for (const auto& file : svi::builtin_problems()) {
      const auto path = dir / (file.name + ".json");
      svi::save_problem(path, file);
      std::cout << path.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "svi_examples: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
