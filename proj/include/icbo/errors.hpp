#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace icbo {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A value or document that does not satisfy a declared contract.
class ValidationError : public Error {
public:
  using Error::Error;
};

class PreconditionError : public Error {
public:
  using Error::Error;
};

class InsufficientDataError : public Error {
public:
  using Error::Error;
};

/// A prompt template was rendered without a required placeholder value.
class TemplateError : public Error {
public:
  TemplateError(std::string placeholder)
      : Error("missing template placeholder: " + placeholder),
        placeholder_(std::move(placeholder)) {}
  const std::string &placeholder() const noexcept { return placeholder_; }

private:
  std::string placeholder_;
};

/// Failures talking to a completion backend. The digest identifies the
/// offending request so it can be replayed against a scripted mock.
class BackendError : public Error {
public:
  BackendError(const std::string &what, std::string digest)
      : Error(what + " [request " + digest + "]"), digest_(std::move(digest)) {}
  const std::string &digest() const noexcept { return digest_; }

private:
  std::string digest_;
};

class TransportError : public BackendError {
public:
  using BackendError::BackendError;
};

class ProtocolError : public BackendError {
public:
  using BackendError::BackendError;
};

class SurrogateFailure : public Error {
public:
  using Error::Error;
};

class SamplerFailure : public Error {
public:
  using Error::Error;
};

class FitError : public Error {
public:
  using Error::Error;
};

class RankDeficiencyError : public Error {
public:
  using Error::Error;
};

class DataIntegrityError : public Error {
public:
  using Error::Error;
};

} // namespace icbo
