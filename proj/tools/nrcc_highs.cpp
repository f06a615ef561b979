// Minimal stand-in for the `highs` command-line solver: reads an MPS model,
// solves it and writes a raw solution file. Accepts the subset of flags the
// subprocess backend passes.

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <Highs.h>

int main(int argc, char** argv) {
  CLI::App app{"Solve an MPS model with HiGHS"};
  std::string model_file, solution_file, options_file;
  app.add_option("--model_file", model_file, "MPS model")->required();
  app.add_option("--solution_file", solution_file, "Raw solution output");
  app.add_option("--options_file", options_file, "HiGHS options file");
  CLI11_PARSE(app, argc, argv);

  Highs h;
  h.setOptionValue("output_flag", false);
  if (!options_file.empty() && h.readOptions(options_file) == HighsStatus::kError) {
    std::cerr << "cannot read options file " << options_file << "\n";
    return 1;
  }
  if (h.readModel(model_file) == HighsStatus::kError) {
    std::cerr << "cannot read model " << model_file << "\n";
    return 1;
  }
  if (h.run() == HighsStatus::kError) {
    std::cerr << "solve failed: " << h.modelStatusToString(h.getModelStatus()) << "\n";
  }
  std::cout << "Model status: " << h.modelStatusToString(h.getModelStatus()) << "\n";
  if (!solution_file.empty() && h.writeSolution(solution_file, kSolutionStyleRaw) == HighsStatus::kError) {
    std::cerr << "cannot write solution file " << solution_file << "\n";
    return 1;
  }
  return 0;
}
