#include "lossres/grad/parameter_store.hpp"

#include "lossres/error.hpp"

namespace lossres::grad {

Matrix& ParameterStore::add(const std::string& name, Matrix init) {
  if (slots_.contains(name)) throw DomainError("parameter '" + name + "' already defined");
  Slot s;
  s.first_moment = Matrix::Zero(init.rows(), init.cols());
  s.second_moment = Matrix::Zero(init.rows(), init.cols());
  s.max_second_moment = Matrix::Zero(init.rows(), init.cols());
  s.value = std::move(init);
  return slots_.emplace(name, std::move(s)).first->second.value;
}

const ParameterStore::Slot& ParameterStore::slot(const std::string& name) const {
  auto it = slots_.find(name);
  if (it == slots_.end()) throw DomainError("unknown parameter '" + name + "'");
  return it->second;
}

ParameterStore::Slot& ParameterStore::mutable_slot(const std::string& name) {
  auto it = slots_.find(name);
  if (it == slots_.end()) throw DomainError("unknown parameter '" + name + "'");
  return it->second;
}

const Matrix& ParameterStore::value(const std::string& name) const { return slot(name).value; }
Matrix& ParameterStore::value(const std::string& name) { return mutable_slot(name).value; }

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : slots_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, s] : slots_) n += static_cast<std::size_t>(s.value.size());
  return n;
}

void ParameterStore::reset_optimizer_state() {
  for (auto& [_, s] : slots_) {
    s.first_moment.setZero();
    s.second_moment.setZero();
    s.max_second_moment.setZero();
  }
  step_ = 0;
}

nlohmann::json ParameterStore::to_json() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [name, s] : slots_) {
    std::vector<double> row_major;
    row_major.reserve(static_cast<std::size_t>(s.value.size()));
    for (Eigen::Index r = 0; r < s.value.rows(); ++r)
      for (Eigen::Index c = 0; c < s.value.cols(); ++c) row_major.push_back(s.value(r, c));
    out[name] = {{"shape", {s.value.rows(), s.value.cols()}}, {"values", row_major}};
  }
  return out;
}

ParameterStore ParameterStore::from_json(const nlohmann::json& j) {
  ParameterStore store;
  for (const auto& [name, entry] : j.items()) {
    const auto rows = entry.at("shape").at(0).get<Eigen::Index>();
    const auto cols = entry.at("shape").at(1).get<Eigen::Index>();
    const auto values = entry.at("values").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(values.size()) != rows * cols)
      throw DataError("checkpoint parameter '" + name + "': value count does not match shape");
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values[static_cast<std::size_t>(r * cols + c)];
    store.add(name, std::move(m));
  }
  return store;
}

}  // namespace lossres::grad
