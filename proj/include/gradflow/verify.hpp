#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gradflow/config.hpp"

namespace gradflow {

enum class CheckStatus { pass, fail, skipped };

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::skipped;
  std::string detail;  // reason when skipped, witness when failed
  nlohmann::json metrics = nlohmann::json::object();
};

struct VerifyReport {
  std::vector<CheckResult> checks;  // sorted by name

  bool passed() const noexcept;
};

/// Run every property check applicable to the configuration. Inapplicable
/// checks are reported as skipped with a reason; nothing throws for a valid
/// configuration.
VerifyReport verify(const ExperimentConfig& cfg);

/// True when every kernel has a globally Lipschitz derivative.
bool lipschitz_kernels(const PotentialMatrix& pm);

void to_json(nlohmann::json& j, const CheckResult& r);
void to_json(nlohmann::json& j, const VerifyReport& r);

}  // namespace gradflow
