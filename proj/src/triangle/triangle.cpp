#include "lossres/triangle.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "lossres/error.hpp"

namespace lossres {

std::string_view to_string(Lob lob) { return lob == Lob::kLob1 ? "LOB1" : "LOB2"; }

Lob parse_lob(std::string_view text) {
  if (text == "LOB1" || text == "1") return Lob::kLob1;
  if (text == "LOB2" || text == "2") return Lob::kLob2;
  throw DataError("unknown line of business '" + std::string(text) + "'");
}

std::vector<CellIndex> lower_cells(int origins) {
  std::vector<CellIndex> out;
  for (int i = 2; i <= origins; ++i)
    for (int j = origins - i + 2; j <= origins; ++j) out.push_back({i, j});
  return out;
}

std::vector<CellIndex> upper_cells(int origins) {
  std::vector<CellIndex> out;
  for (int i = 1; i <= origins; ++i)
    for (int j = 1; j <= origins - i + 1; ++j) out.push_back({i, j});
  return out;
}

CellGrid::CellGrid(int origins, const CellMap& cells, std::string_view context) : origins_(origins) {
  if (origins < 2) throw DataError(std::string(context) + ": need at least 2 accident years");
  const auto n = static_cast<std::size_t>(origins);
  values_.assign(n * n, std::numeric_limits<double>::quiet_NaN());

  std::size_t lower_seen = 0;
  for (const auto& [idx, v] : cells) {
    if (idx.accident < 1 || idx.accident > origins || idx.development < 1 || idx.development > origins) {
      std::ostringstream msg;
      msg << context << ": cell (" << idx.accident << "," << idx.development << ") outside 1.." << origins;
      throw DataError(msg.str());
    }
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << context << ": non-finite value at (" << idx.accident << "," << idx.development << ")";
      throw DataError(msg.str());
    }
    if (!in_upper(origins, idx.accident, idx.development)) ++lower_seen;
    values_[static_cast<std::size_t>(idx.accident - 1) * n + static_cast<std::size_t>(idx.development - 1)] = v;
  }
  for (const auto& idx : upper_cells(origins)) {
    if (!cells.contains(idx)) {
      std::ostringstream msg;
      msg << context << ": missing cell (" << idx.accident << "," << idx.development << ")";
      throw DataError(msg.str());
    }
  }
  const std::size_t lower_total = n * (n - 1) / 2;
  if (lower_seen == 0) {
    shape_ = TriangleShape::kUpper;
  } else if (lower_seen == lower_total) {
    shape_ = TriangleShape::kSquare;
  } else {
    for (const auto& idx : lower_cells(origins)) {
      if (!cells.contains(idx)) {
        std::ostringstream msg;
        msg << context << ": partial lower triangle, missing cell (" << idx.accident << "," << idx.development << ")";
        throw DataError(msg.str());
      }
    }
  }
}

bool CellGrid::has(int i, int j) const {
  if (i < 1 || j < 1 || i > origins_ || j > origins_) return false;
  return shape_ == TriangleShape::kSquare || in_upper(origins_, i, j);
}

double CellGrid::at(int i, int j) const {
  if (!has(i, j)) {
    std::ostringstream msg;
    msg << "cell (" << i << "," << j << ") not present";
    throw DataError(msg.str());
  }
  return values_[static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(origins_) + static_cast<std::size_t>(j - 1)];
}

CellGrid CellGrid::upper() const {
  CellGrid out = *this;
  out.shape_ = TriangleShape::kUpper;
  const auto n = static_cast<std::size_t>(origins_);
  for (int i = 1; i <= origins_; ++i)
    for (int j = 1; j <= origins_; ++j)
      if (!in_upper(origins_, i, j))
        out.values_[static_cast<std::size_t>(i - 1) * n + static_cast<std::size_t>(j - 1)] =
            std::numeric_limits<double>::quiet_NaN();
  return out;
}

CellGrid CellGrid::scaled_rows(std::span<const double> row_factor, bool divide) const {
  CellGrid out = *this;
  const auto n = static_cast<std::size_t>(origins_);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double& v = out.values_[i * n + j];
      v = divide ? v / row_factor[i] : v * row_factor[i];
    }
  return out;
}

namespace {

std::string context_of(const std::string& company, Lob lob) {
  return "company '" + company + "' " + std::string(to_string(lob));
}

void check_premiums(const std::vector<double>& premiums, int origins, const std::string& context) {
  if (static_cast<int>(premiums.size()) != origins) {
    std::ostringstream msg;
    msg << context << ": expected " << origins << " premiums, got " << premiums.size();
    throw DataError(msg.str());
  }
  for (std::size_t i = 0; i < premiums.size(); ++i) {
    if (!(premiums[i] > 0.0) || !std::isfinite(premiums[i])) {
      std::ostringstream msg;
      msg << context << ": non-positive premium for accident year " << (i + 1);
      throw DataError(msg.str());
    }
  }
}

int origins_from_premiums(const std::vector<double>& premiums) { return static_cast<int>(premiums.size()); }

}  // namespace

LossTriangle::LossTriangle(std::string company, Lob lob, std::vector<double> premiums, const CellMap& cells,
                           std::vector<int> origin_labels)
    : company_(std::move(company)),
      lob_(lob),
      premiums_(std::move(premiums)),
      origin_labels_(std::move(origin_labels)),
      grid_(origins_from_premiums(premiums_), cells, context_of(company_, lob_)) {
  check_premiums(premiums_, grid_.origins(), context_of(company_, lob_));
}

LossTriangle::LossTriangle(std::string company, Lob lob, std::vector<double> premiums, CellGrid grid,
                           std::vector<int> origin_labels)
    : company_(std::move(company)),
      lob_(lob),
      premiums_(std::move(premiums)),
      origin_labels_(std::move(origin_labels)),
      grid_(std::move(grid)) {}

LossTriangle LossTriangle::upper() const {
  return LossTriangle(company_, lob_, premiums_, grid_.upper(), origin_labels_);
}

CellMap LossTriangle::cells() const {
  CellMap out;
  for (int i = 1; i <= origins(); ++i)
    for (int j = 1; j <= origins(); ++j)
      if (has(i, j)) out.emplace(CellIndex{i, j}, value(i, j));
  return out;
}

StandardizedTriangle::StandardizedTriangle(const LossTriangle& raw)
    : company_(raw.company_),
      lob_(raw.lob_),
      exposure_(raw.premiums_),
      origin_labels_(raw.origin_labels_),
      grid_(raw.grid_.scaled_rows(raw.premiums_, /*divide=*/true)) {
  for (double w : exposure_)
    if (!(w > 0.0)) throw DomainError("standardize: exposure must be strictly positive");
}

LossTriangle StandardizedTriangle::destandardize() const {
  return LossTriangle(company_, lob_, exposure_, grid_.scaled_rows(exposure_, /*divide=*/false), origin_labels_);
}

StandardizedTriangle standardize(const LossTriangle& triangle) { return StandardizedTriangle(triangle); }

PortfolioDataset::PortfolioDataset(std::vector<TrianglePair> pairs) : pairs_(std::move(pairs)) {
  std::set<std::string> seen;
  for (const auto& p : pairs_) {
    if (p.lob1.company() != p.lob2.company())
      throw DataError("triangle pair mixes companies '" + p.lob1.company() + "' and '" + p.lob2.company() + "'");
    if (p.lob1.lob() != Lob::kLob1 || p.lob2.lob() != Lob::kLob2)
      throw DataError("company '" + p.company() + "': pair must hold LOB1 then LOB2");
    if (p.lob1.origins() != p.lob2.origins())
      throw DataError("company '" + p.company() + "': LOB triangles differ in accident-year count");
    if (!seen.insert(p.company()).second) throw DataError("duplicate company '" + p.company() + "'");
    if (origins_ == 0) origins_ = p.lob1.origins();
    if (p.lob1.origins() != origins_) throw DataError("company '" + p.company() + "': accident-year count differs");
  }
}

const TrianglePair& PortfolioDataset::at(std::string_view company) const {
  if (auto k = index_of(company)) return pairs_[*k];
  throw DataError("unknown company '" + std::string(company) + "'");
}

std::optional<std::size_t> PortfolioDataset::index_of(std::string_view company) const {
  for (std::size_t k = 0; k < pairs_.size(); ++k)
    if (pairs_[k].company() == company) return k;
  return std::nullopt;
}

PortfolioDataset PortfolioDataset::upper() const {
  std::vector<TrianglePair> out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.push_back({p.lob1.upper(), p.lob2.upper()});
  return PortfolioDataset(std::move(out));
}

Reserves true_reserve(const TrianglePair& square) {
  double r[2] = {0.0, 0.0};
  for (Lob lob : {Lob::kLob1, Lob::kLob2}) {
    const LossTriangle& t = square[lob];
    if (!t.is_square()) throw DataError("true_reserve: company '" + t.company() + "' has no lower triangle");
    for (const auto& c : lower_cells(t.origins())) r[static_cast<int>(lob)] += t.value(c.accident, c.development);
  }
  return Reserves::of(r[0], r[1]);
}

}  // namespace lossres
