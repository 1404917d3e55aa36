#pragma once

#include <stdexcept>
#include <string>

namespace sentigraph {

enum class Errc {
  MISALIGNED_SPAN,
  LABEL_COLLISION,
  SCHEMA_ERROR,
  PARSE_ERROR,
  LABEL_ERROR,
  TREEBANK_MISMATCH,
  DIM_MISMATCH,
  NONFINITE_LOSS,
  EMPTY_TREEBANK,
  NON_CONVERGED,
  BAD_MAGIC,
  VERSION_UNSUPPORTED,
  SHAPE_MISMATCH,
  DUPLICATE_ID,
  MISSING_SPLIT,
  MALFORMED_LINE,
  MISSING_VECTOR,
  IO_ERROR,
};

const char* errc_name(Errc c);

// Data-level failure with a stable code; the CLI maps these to exit status 1
// (3 for NON_CONVERGED).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace sentigraph
