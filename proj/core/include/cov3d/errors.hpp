#pragma once

#include <stdexcept>
#include <string>

namespace cov3d {

// Error families map one-to-one onto CLI exit codes.
enum class ErrorFamily {
  io = 3,
  model_format = 4,
  training = 5,
  geometry = 6,
  config = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorFamily family, const std::string& what)
      : std::runtime_error(what), family_(family) {}
  ErrorFamily family() const { return family_; }

 private:
  ErrorFamily family_;
};

#define COV3D_DEFINE_ERROR(NAME, FAMILY)                      \
  class NAME : public Error {                                 \
   public:                                                    \
    explicit NAME(const std::string& what)                    \
        : Error(ErrorFamily::FAMILY, what) {}                 \
  }

COV3D_DEFINE_ERROR(IoError, io);
COV3D_DEFINE_ERROR(MissingFramesError, io);
COV3D_DEFINE_ERROR(CorruptFrameError, io);
COV3D_DEFINE_ERROR(InconsistentDimsError, io);

COV3D_DEFINE_ERROR(VersionMismatchError, model_format);
COV3D_DEFINE_ERROR(ChecksumMismatchError, model_format);

COV3D_DEFINE_ERROR(PairTooSmallError, training);
COV3D_DEFINE_ERROR(ClassTooSmallError, training);
COV3D_DEFINE_ERROR(GraphEmptyError, training);
COV3D_DEFINE_ERROR(EigenFailureError, training);

COV3D_DEFINE_ERROR(NotPositiveDefiniteError, geometry);
COV3D_DEFINE_ERROR(WindowTooSmallError, geometry);
COV3D_DEFINE_ERROR(DegenerateFullDescriptorError, geometry);

COV3D_DEFINE_ERROR(EmptyGridError, config);
COV3D_DEFINE_ERROR(MemoryBudgetError, config);
COV3D_DEFINE_ERROR(ConfigError, config);

#undef COV3D_DEFINE_ERROR

}  // namespace cov3d
