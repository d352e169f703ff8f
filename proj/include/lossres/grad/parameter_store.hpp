#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lossres/grad/tape.hpp"

namespace lossres::grad {

/// Named parameters with the moment accumulators AMSGRAD keeps per entry.
class ParameterStore {
 public:
  struct Slot {
    Matrix value;
    Matrix first_moment;
    Matrix second_moment;
    Matrix max_second_moment;
  };

  Matrix& add(const std::string& name, Matrix init);
  bool contains(const std::string& name) const { return slots_.contains(name); }
  const Matrix& value(const std::string& name) const;
  Matrix& value(const std::string& name);
  const Slot& slot(const std::string& name) const;
  Slot& mutable_slot(const std::string& name);
  std::vector<std::string> names() const;
  std::size_t parameter_count() const;

  std::int64_t step() const { return step_; }
  std::int64_t advance_step() { return ++step_; }
  /// Zero the moment accumulators and the step counter; values are kept.
  void reset_optimizer_state();

  auto begin() const { return slots_.begin(); }
  auto end() const { return slots_.end(); }

  /// name -> {shape, row-major values}; doubles are written with round-trip precision.
  nlohmann::json to_json() const;
  static ParameterStore from_json(const nlohmann::json& j);

 private:
  std::map<std::string, Slot> slots_;
  std::int64_t step_ = 0;
};

}  // namespace lossres::grad
