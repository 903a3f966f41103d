#pragma once

#include <stdexcept>
#include <string>

namespace longguide {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data (datasets, references, histograms) violates a precondition.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A model response could not be parsed into the expected structure.
class ParseError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Network-level failure talking to a chat endpoint, after retries.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// The endpoint rejected our credentials. Message is the server body verbatim.
class AuthError : public Error {
 public:
  using Error::Error;
};

/// A mock script ran out of canned responses.
class ScriptUnderrunError : public Error {
 public:
  using Error::Error;
};

}  // namespace longguide
