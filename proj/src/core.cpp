#include <cmath>
#include <sstream>

#include "gradflow/errors.hpp"
#include "gradflow/matrix.hpp"

namespace gradflow {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::ostringstream os;
  os << "invalid configuration";
  for (const auto& p : problems) os << "\n  " << p;
  return os.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

SquareMatrix::SquareMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : n_(rows.size()) {
  data_.reserve(n_ * n_);
  for (const auto& row : rows) {
    if (row.size() != n_) throw UsageError("SquareMatrix: ragged initializer");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

bool SquareMatrix::is_symmetric() const noexcept {
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      if ((*this)(i, j) != (*this)(j, i)) return false;
  return true;
}

bool SquareMatrix::all_finite() const noexcept {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

SquareMatrix SquareMatrix::scaled(double c) const {
  SquareMatrix out = *this;
  for (double& v : out.data_) v *= c;
  return out;
}

}  // namespace gradflow
