#include "ido/error.hpp"

namespace ido {

ParseError::ParseError(const std::string& path, std::size_t line, const std::string& what)
    : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

TrainingError::TrainingError(std::size_t sample, std::size_t iteration, const std::string& what)
    : Error("sample " + std::to_string(sample) + ", iteration " + std::to_string(iteration) + ": " +
            what),
      sample_(sample),
      iteration_(iteration) {}

}  // namespace ido
