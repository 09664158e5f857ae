#pragma once

#include <stdexcept>
#include <string>

namespace mrseq {

// Root of every exception thrown by the library. `path` locates the
// offending field or block when one is known (".blocks[2].flip_angle").
class Error : public std::runtime_error
{
public:
  explicit Error(std::string const &what, std::string path = {})
    : std::runtime_error(what)
    , path_(std::move(path))
  {
  }

  std::string const &path() const noexcept { return path_; }

private:
  std::string path_;
};

// Malformed input file or request body.
class SchemaError : public Error
{
public:
  SchemaError(std::string const &path, std::string const &what)
    : Error(path.empty() ? what : path + ": " + what, path)
    , detail_(what)
  {
  }

  std::string const &detail() const noexcept { return detail_; }

private:
  std::string detail_;
};

class Cancelled : public Error
{
public:
  Cancelled()
    : Error("simulation cancelled")
  {
  }
};

} // namespace mrseq
