#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace labemb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t line, const std::string& reason)
      : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class UnknownAbnormality : public Error {
 public:
  UnknownAbnormality(std::size_t line, const std::string& value)
      : Error("line " + std::to_string(line) + ": unknown abnormality code '" + value + "'"),
        line_(line),
        value_(value) {}
  std::size_t line() const { return line_; }
  const std::string& value() const { return value_; }

 private:
  std::size_t line_;
  std::string value_;
};

class FormatError : public Error {
 public:
  FormatError(std::size_t offset, const std::string& reason)
      : Error("byte " + std::to_string(offset) + ": " + reason), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class NonConvergence : public Error {
 public:
  explicit NonConvergence(int iterations)
      : Error("no convergence after " + std::to_string(iterations) + " iterations"),
        iterations_(iterations) {}
  int iterations() const { return iterations_; }

 private:
  int iterations_;
};

#define LABEMB_SIMPLE_ERROR(Name)          \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  };

LABEMB_SIMPLE_ERROR(EmptyVocabulary)
LABEMB_SIMPLE_ERROR(EmptyCorpus)
LABEMB_SIMPLE_ERROR(DegenerateVocab)
LABEMB_SIMPLE_ERROR(DimensionMismatch)
LABEMB_SIMPLE_ERROR(ZeroVector)
LABEMB_SIMPLE_ERROR(UnknownToken)
LABEMB_SIMPLE_ERROR(InfeasibleConfig)
LABEMB_SIMPLE_ERROR(InvalidArgument)
LABEMB_SIMPLE_ERROR(WrongMode)
LABEMB_SIMPLE_ERROR(EmptyTestSet)
LABEMB_SIMPLE_ERROR(EmptyInput)
LABEMB_SIMPLE_ERROR(SingleClassInput)
LABEMB_SIMPLE_ERROR(NoPositives)
LABEMB_SIMPLE_ERROR(FoldTooSmall)
LABEMB_SIMPLE_ERROR(PerplexityTooLarge)
LABEMB_SIMPLE_ERROR(DegenerateInput)
LABEMB_SIMPLE_ERROR(NonPositiveCount)
LABEMB_SIMPLE_ERROR(TrainingDiverged)
LABEMB_SIMPLE_ERROR(ConfigError)
LABEMB_SIMPLE_ERROR(IOError)
LABEMB_SIMPLE_ERROR(MissingArtifact)

#undef LABEMB_SIMPLE_ERROR

}  // namespace labemb
