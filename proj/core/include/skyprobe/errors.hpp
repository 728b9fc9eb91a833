#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace skyprobe {

// Root of every exception thrown by the library. Callers that only need to
// report a failure can catch this; the subclasses name the condition.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SKYPROBE_DEFINE_ERROR(Name)          \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

// capture decoding and flow statistics
SKYPROBE_DEFINE_ERROR(MalformedCapture);
SKYPROBE_DEFINE_ERROR(SingletonFlow);

// datasets
SKYPROBE_DEFINE_ERROR(SchemaMismatch);
SKYPROBE_DEFINE_ERROR(DatasetEmpty);
SKYPROBE_DEFINE_ERROR(SingleClass);

// classifiers and models
SKYPROBE_DEFINE_ERROR(EmptySet);
SKYPROBE_DEFINE_ERROR(NonFinite);
SKYPROBE_DEFINE_ERROR(UntrainedModel);
SKYPROBE_DEFINE_ERROR(ModelFormatError);
SKYPROBE_DEFINE_ERROR(WrongArity);

// metrics
SKYPROBE_DEFINE_ERROR(LengthMismatch);
SKYPROBE_DEFINE_ERROR(EmptyInput);

// trigger rules
SKYPROBE_DEFINE_ERROR(RuleParseError);

// probe <-> siem control channel
SKYPROBE_DEFINE_ERROR(ConnectionRefused);
SKYPROBE_DEFINE_ERROR(HandshakeRejected);
SKYPROBE_DEFINE_ERROR(Timeout);
SKYPROBE_DEFINE_ERROR(InvalidAddress);
SKYPROBE_DEFINE_ERROR(MalformedHandshake);
SKYPROBE_DEFINE_ERROR(ChannelClosed);

// siem
SKYPROBE_DEFINE_ERROR(NormalizationFailed);
SKYPROBE_DEFINE_ERROR(OutOfRange);
SKYPROBE_DEFINE_ERROR(DirectiveError);
SKYPROBE_DEFINE_ERROR(StoreFailure);

// scenario scripts
SKYPROBE_DEFINE_ERROR(ScenarioError);

#undef SKYPROBE_DEFINE_ERROR

class RowParseError : public Error {
 public:
  RowParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace skyprobe
