#pragma once

#include <stdexcept>
#include <string>

namespace coopmon {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define COOPMON_DEFINE_ERROR(Name)                 \
  class Name : public Error {                      \
   public:                                         \
    explicit Name(const std::string& what)         \
        : Error(std::string(#Name ": ") + what) {} \
  }

COOPMON_DEFINE_ERROR(GenerationFailed);
COOPMON_DEFINE_ERROR(OutOfBounds);
COOPMON_DEFINE_ERROR(IoError);
COOPMON_DEFINE_ERROR(FormatError);
COOPMON_DEFINE_ERROR(NoPath);
COOPMON_DEFINE_ERROR(SpawnFailed);
COOPMON_DEFINE_ERROR(EpisodeFinished);
COOPMON_DEFINE_ERROR(ShapeMismatch);
COOPMON_DEFINE_ERROR(NoCandidates);
COOPMON_DEFINE_ERROR(Infeasible);
COOPMON_DEFINE_ERROR(MissingTeamSize);
COOPMON_DEFINE_ERROR(DegenerateVariance);
COOPMON_DEFINE_ERROR(ConfigError);
COOPMON_DEFINE_ERROR(CoverageGap);

#undef COOPMON_DEFINE_ERROR

// Carries the offending environment index so bridge clients can route it.
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what, int env_id = -1)
      : Error("ProtocolError: " + what), env_id_(env_id) {}
  int env_id() const { return env_id_; }

 private:
  int env_id_;
};

}  // namespace coopmon
