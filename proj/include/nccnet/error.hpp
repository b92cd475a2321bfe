// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NCCNET_ERROR_HPP
#define NCCNET_ERROR_HPP

#include <stdexcept>
#include <string>

namespace nccnet {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, const std::string& path)
      : Error(what + ": " + path), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace nccnet

#endif  // NCCNET_ERROR_HPP
