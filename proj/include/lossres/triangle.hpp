#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lossres {

enum class Lob : int { kLob1 = 0, kLob2 = 1 };

std::string_view to_string(Lob lob);
Lob parse_lob(std::string_view text);

/// 1-based (accident year, development year).
struct CellIndex {
  int accident = 0;
  int development = 0;
  auto operator<=>(const CellIndex&) const = default;
};

using CellMap = std::map<CellIndex, double>;

enum class TriangleShape { kUpper, kSquare };

inline bool in_upper(int origins, int i, int j) { return i >= 1 && j >= 1 && j <= origins - i + 1; }
inline bool in_lower(int origins, int i, int j) { return i >= 2 && i <= origins && j >= origins - i + 2 && j <= origins; }

/// Lower-triangle index set {(i,j): 2<=i<=I, I-i+2<=j<=I}, row-major.
std::vector<CellIndex> lower_cells(int origins);
/// Upper-triangle index set {(i,j): 1<=i<=I, 1<=j<=I-i+1}, row-major.
std::vector<CellIndex> upper_cells(int origins);

/// Dense I x I storage with a validated presence pattern (upper triangle or full square).
class CellGrid {
 public:
  CellGrid() = default;
  CellGrid(int origins, const CellMap& cells, std::string_view context);

  int origins() const { return origins_; }
  TriangleShape shape() const { return shape_; }
  bool has(int i, int j) const;
  double at(int i, int j) const;
  CellGrid upper() const;
  CellGrid scaled_rows(std::span<const double> row_factor, bool divide) const;

 private:
  int origins_ = 0;
  TriangleShape shape_ = TriangleShape::kUpper;
  std::vector<double> values_;
};

/// Incremental paid losses of one company and line of business.
class LossTriangle {
 public:
  LossTriangle(std::string company, Lob lob, std::vector<double> premiums, const CellMap& cells,
               std::vector<int> origin_labels = {});

  const std::string& company() const { return company_; }
  Lob lob() const { return lob_; }
  int origins() const { return grid_.origins(); }
  TriangleShape shape() const { return grid_.shape(); }
  bool is_square() const { return grid_.shape() == TriangleShape::kSquare; }
  bool has(int i, int j) const { return grid_.has(i, j); }
  double value(int i, int j) const { return grid_.at(i, j); }
  double premium(int i) const { return premiums_.at(static_cast<std::size_t>(i - 1)); }
  std::span<const double> premiums() const { return premiums_; }
  /// Calendar labels of the accident years, when known (metadata only).
  const std::vector<int>& origin_labels() const { return origin_labels_; }

  LossTriangle upper() const;
  CellMap cells() const;

 private:
  friend class StandardizedTriangle;
  LossTriangle(std::string company, Lob lob, std::vector<double> premiums, CellGrid grid,
               std::vector<int> origin_labels);

  std::string company_;
  Lob lob_;
  std::vector<double> premiums_;
  std::vector<int> origin_labels_;
  CellGrid grid_;
};

/// Y_ij = X_ij / omega_i. Keeps the exposure so the map can be inverted.
class StandardizedTriangle {
 public:
  explicit StandardizedTriangle(const LossTriangle& raw);

  const std::string& company() const { return company_; }
  Lob lob() const { return lob_; }
  int origins() const { return grid_.origins(); }
  bool has(int i, int j) const { return grid_.has(i, j); }
  double value(int i, int j) const { return grid_.at(i, j); }
  double exposure(int i) const { return exposure_.at(static_cast<std::size_t>(i - 1)); }
  std::span<const double> exposures() const { return exposure_; }

  LossTriangle destandardize() const;

 private:
  std::string company_;
  Lob lob_;
  std::vector<double> exposure_;
  std::vector<int> origin_labels_;
  CellGrid grid_;
};

StandardizedTriangle standardize(const LossTriangle& triangle);

struct TrianglePair {
  LossTriangle lob1;
  LossTriangle lob2;

  const std::string& company() const { return lob1.company(); }
  const LossTriangle& operator[](Lob lob) const { return lob == Lob::kLob1 ? lob1 : lob2; }
  TrianglePair upper() const { return TrianglePair{lob1.upper(), lob2.upper()}; }
};

/// Company-keyed triangle pairs sharing one origin count.
class PortfolioDataset {
 public:
  PortfolioDataset() = default;
  explicit PortfolioDataset(std::vector<TrianglePair> pairs);

  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  int origins() const { return origins_; }
  const TrianglePair& operator[](std::size_t k) const { return pairs_[k]; }
  const TrianglePair& at(std::string_view company) const;
  std::optional<std::size_t> index_of(std::string_view company) const;
  auto begin() const { return pairs_.begin(); }
  auto end() const { return pairs_.end(); }

  /// Same companies, upper triangles only.
  PortfolioDataset upper() const;

 private:
  std::vector<TrianglePair> pairs_;
  int origins_ = 0;
};

struct Reserves {
  double lob1 = 0.0;
  double lob2 = 0.0;
  double total = 0.0;

  static Reserves of(double r1, double r2) { return Reserves{r1, r2, r1 + r2}; }
};

/// Sum of the lower-triangle payments of a full square pair, per LOB and total.
Reserves true_reserve(const TrianglePair& square);

/// Sum of omega_i * Y_ij over the lower index set; `predicted(i, j)` supplies Y.
template <typename PredictedY>
double reserve_from_standardized(std::span<const double> exposure, int origins, PredictedY&& predicted) {
  double total = 0.0;
  for (int i = 2; i <= origins; ++i)
    for (int j = origins - i + 2; j <= origins; ++j)
      total += exposure[static_cast<std::size_t>(i - 1)] * predicted(i, j);
  return total;
}

}  // namespace lossres
