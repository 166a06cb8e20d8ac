#pragma once

#include <stdexcept>
#include <string>

namespace frh {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree (ambient dimension, column count, vector length).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on values was violated (zero vector, non-finite entry, bad k).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The computation collapsed to a zero quantity that cannot be normalized.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Malformed on-disk or textual input (tensor files, vocab, lexicon TSV).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A requested resource (synset, concept, token id, file) does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Transport failure, protocol violation or an ok:false reply from a model backend.
class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace frh
