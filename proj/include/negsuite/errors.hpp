#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace negsuite {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unusable input data (CLI exit code 2).
class InputError : public Error {
 public:
  using Error::Error;
};

// A precondition of an operation was violated (CLI exit code 3).
class ContractError : public Error {
 public:
  using Error::Error;
};

class FormatError : public InputError {
 public:
  FormatError(std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class EmptyDataset : public InputError {
 public:
  EmptyDataset() : InputError("dataset is empty") {}
};

class ZeroVector : public ContractError {
 public:
  explicit ZeroVector(const std::string& id)
      : ContractError("zero-norm vector: " + id), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class DimMismatch : public ContractError {
 public:
  using ContractError::ContractError;
};

class EmptyCaption : public ContractError {
 public:
  EmptyCaption() : ContractError("caption is empty") {}
};

class InsufficientConcepts : public ContractError {
 public:
  using ContractError::ContractError;
};

class MissingDistractor : public ContractError {
 public:
  using ContractError::ContractError;
};

class MissingQuery : public ContractError {
 public:
  using ContractError::ContractError;
};

class MissingEmbedding : public ContractError {
 public:
  explicit MissingEmbedding(const std::string& id)
      : ContractError("missing embedding: " + id), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class EmptyFrameList : public ContractError {
 public:
  EmptyFrameList() : ContractError("frame list is empty") {}
};

class NonSquare : public ContractError {
 public:
  using ContractError::ContractError;
};

class IndexOutOfRange : public ContractError {
 public:
  using ContractError::ContractError;
};

class NonFinite : public ContractError {
 public:
  using ContractError::ContractError;
};

class UnknownToken : public ContractError {
 public:
  explicit UnknownToken(const std::string& token)
      : ContractError("unknown token: " + token), token_(token) {}
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

class DivergedLoss : public ContractError {
 public:
  using ContractError::ContractError;
};

class DegenerateData : public ContractError {
 public:
  using ContractError::ContractError;
};

}  // namespace negsuite
