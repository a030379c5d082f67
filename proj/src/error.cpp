#include "msm/error.hpp"

namespace msm {

Error::Error(ErrorKind kind, std::string code, const std::string& message,
             nlohmann::json detail)
    : std::runtime_error(message), kind_(kind), code_(std::move(code)),
      detail_(std::move(detail)) {}

nlohmann::json Error::to_json() const {
  return {{"error", code_}, {"message", what()}, {"detail", detail_}};
}

void fail_validation(std::string code, const std::string& message, nlohmann::json detail) {
  throw Error(ErrorKind::validation, std::move(code), message, std::move(detail));
}

void fail_computation(std::string code, const std::string& message, nlohmann::json detail) {
  throw Error(ErrorKind::computation, std::move(code), message, std::move(detail));
}

}  // namespace msm
