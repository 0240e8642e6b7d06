#pragma once

#include <stdexcept>
#include <string>

namespace isa {

// Base class for all errors raised by the library. CLI maps these to exit
// code 1 (input error); anything else escaping to main is exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be parsed; message names the offending line where known.
class MalformedFileError : public Error {
 public:
  using Error::Error;
};

// Structured input (JSON skeleton, manifest, config) violates its schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class EmptyMeshError : public Error {
 public:
  using Error::Error;
};

class DegenerateMeshError : public Error {
 public:
  using Error::Error;
};

class InvalidPoseError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Skeletons of a category disagree in node count or link set.
class TopologyMismatchError : public Error {
 public:
  using Error::Error;
};

// Binary file carries the wrong magic or an unsupported format version.
class VersionError : public Error {
 public:
  using Error::Error;
};

// A stage output refers to an input whose digest no longer matches.
class DigestMismatchError : public Error {
 public:
  using Error::Error;
};

// Truncated or checksum-corrupted binary payload.
class CorruptFileError : public Error {
 public:
  using Error::Error;
};

// Part-level preconditions (e.g. split feature on a background center).
class InvalidPartError : public Error {
 public:
  using Error::Error;
};

}  // namespace isa
