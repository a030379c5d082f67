#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace msm {

// Validation errors come from input data or mappings (CLI exit 2);
// computation errors come from estimators and fitters (CLI exit 3).
enum class ErrorKind { validation, computation };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string code, const std::string& message,
        nlohmann::json detail = nlohmann::json::object());

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

  // {error, message, detail}
  nlohmann::json to_json() const;

private:
  ErrorKind kind_;
  std::string code_;
  nlohmann::json detail_;
};

[[noreturn]] void fail_validation(std::string code, const std::string& message,
                                  nlohmann::json detail = nlohmann::json::object());
[[noreturn]] void fail_computation(std::string code, const std::string& message,
                                   nlohmann::json detail = nlohmann::json::object());

}  // namespace msm
