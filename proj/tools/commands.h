#ifndef MORALFRAME_TOOLS_COMMANDS_H_
#define MORALFRAME_TOOLS_COMMANDS_H_

#include <ostream>
#include <string>

#include "moralframe/pipeline.h"

namespace moralframe::cli {

// Each command reads the resolved config, writes its reports under
// config.output_dir and prints a short summary to `log`.
void build_axes(const ExperimentConfig& config, std::ostream& log);
void score(const ExperimentConfig& config, std::ostream& log);
void train_mf(const ExperimentConfig& config, std::ostream& log);
void eval_mf(const ExperimentConfig& config, std::ostream& log);
void partisan(const ExperimentConfig& config, std::ostream& log);
void correlate(const ExperimentConfig& config, std::ostream& log);

}  // namespace moralframe::cli

#endif  // MORALFRAME_TOOLS_COMMANDS_H_
