#pragma once

#include <stdexcept>
#include <string>

namespace caaug {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// geometry
struct ZeroRange : Error { using Error::Error; };

// scene partition
struct EmptyCloud : Error { using Error::Error; };

// gt database
struct EmptyObject : Error { using Error::Error; };
struct SpanTooWide : Error { using Error::Error; };

// placement / pipeline
struct SpecMismatch : Error { using Error::Error; };
struct UnknownStrategy : Error { using Error::Error; };

// io
struct IoError : Error { using Error::Error; };
struct MalformedFile : Error { using Error::Error; };
struct FormatVersionMismatch : Error { using Error::Error; };
struct SingularCalib : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace caaug
