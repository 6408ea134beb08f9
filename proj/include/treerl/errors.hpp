#pragma once

#include <stdexcept>
#include <string>

namespace treerl {

// Shape or contract violation while building a computation graph or model.
struct ShapeError : std::invalid_argument {
  explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Malformed input: corpora, tree files, embeddings, checkpoints.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values where finiteness is required.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace treerl
