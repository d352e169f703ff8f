#include "lossres/triangle_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>
#include <vector>

#include "lossres/error.hpp"

namespace lossres {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + v[k];
  return s;
}

double parse_number(const std::string& text, const std::filesystem::path& path, std::size_t line_no) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    std::ostringstream msg;
    msg << path.string() << ":" << line_no << ": cannot parse number '" << text << "'";
    throw DataError(msg.str());
  }
  return v;
}

int parse_int(const std::string& text, const std::filesystem::path& path, std::size_t line_no) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    std::ostringstream msg;
    msg << path.string() << ":" << line_no << ": cannot parse integer '" << text << "'";
    throw DataError(msg.str());
  }
  return v;
}

struct CsvRows {
  std::vector<std::string> header;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
};

CsvRows read_csv(const std::filesystem::path& path, const std::string& expected_header, bool prefix_only) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  CsvRows out;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (!have_header) {
      out.header = fields;
      have_header = true;
      const auto expected = split_csv_line(expected_header);
      bool ok = prefix_only ? fields.size() >= expected.size() : fields.size() == expected.size();
      for (std::size_t k = 0; ok && k < expected.size(); ++k) ok = fields[k] == expected[k];
      if (!ok)
        throw DataError(path.string() + ": header '" + join(fields) + "' does not match expected '" +
                        expected_header + "'");
      continue;
    }
    if (fields.size() != out.header.size()) {
      std::ostringstream msg;
      msg << path.string() << ":" << line_no << ": expected " << out.header.size() << " fields, got " << fields.size();
      throw DataError(msg.str());
    }
    out.rows.emplace_back(line_no, std::move(fields));
  }
  if (!have_header) throw DataError(path.string() + ": empty file, missing header '" + expected_header + "'");
  return out;
}

using Key = std::pair<std::string, Lob>;

struct Assembly {
  std::vector<std::string> company_order;
  std::map<Key, CellMap> cells;
  std::map<Key, std::map<int, double>> premiums;
  std::map<Key, std::vector<int>> labels;

  void note_company(const std::string& c) {
    for (const auto& k : company_order)
      if (k == c) return;
    company_order.push_back(c);
  }

  PortfolioDataset build() const {
    std::vector<TrianglePair> pairs;
    for (const auto& company : company_order) {
      std::optional<LossTriangle> tri[2];
      for (Lob lob : {Lob::kLob1, Lob::kLob2}) {
        const Key key{company, lob};
        auto pit = premiums.find(key);
        if (pit == premiums.end())
          throw DataError("company '" + company + "' " + std::string(to_string(lob)) + ": no premiums");
        std::vector<double> prem;
        int expect = 1;
        for (const auto& [i, w] : pit->second) {
          if (i != expect)
            throw DataError("company '" + company + "' " + std::string(to_string(lob)) +
                            ": missing premium for accident year " + std::to_string(expect));
          prem.push_back(w);
          ++expect;
        }
        auto cit = cells.find(key);
        if (cit == cells.end())
          throw DataError("company '" + company + "' " + std::string(to_string(lob)) + ": no loss cells");
        auto lit = labels.find(key);
        tri[static_cast<int>(lob)].emplace(company, lob, prem, cit->second,
                                           lit == labels.end() ? std::vector<int>{} : lit->second);
      }
      pairs.push_back({*tri[0], *tri[1]});
    }
    return PortfolioDataset(std::move(pairs));
  }
};

PortfolioDataset parse_long(const std::filesystem::path& path, const std::filesystem::path& premium_path) {
  Assembly a;
  const auto values = read_csv(path, kLongHeader, false);
  for (const auto& [line_no, f] : values.rows) {
    const Key key{f[0], parse_lob(f[1])};
    a.note_company(f[0]);
    const CellIndex idx{parse_int(f[2], path, line_no), parse_int(f[3], path, line_no)};
    if (!a.cells[key].emplace(idx, parse_number(f[4], path, line_no)).second) {
      std::ostringstream msg;
      msg << path.string() << ":" << line_no << ": duplicate cell (" << f[0] << "," << f[1] << "," << idx.accident
          << "," << idx.development << ")";
      throw DataError(msg.str());
    }
  }
  const auto prem = read_csv(premium_path, kPremiumHeader, false);
  for (const auto& [line_no, f] : prem.rows) {
    const Key key{f[0], parse_lob(f[1])};
    const int i = parse_int(f[2], premium_path, line_no);
    if (!a.premiums[key].emplace(i, parse_number(f[3], premium_path, line_no)).second) {
      std::ostringstream msg;
      msg << premium_path.string() << ":" << line_no << ": duplicate premium (" << f[0] << "," << f[1] << "," << i << ")";
      throw DataError(msg.str());
    }
  }
  return a.build();
}

PortfolioDataset parse_wide(const std::filesystem::path& path) {
  Assembly a;
  const auto csv = read_csv(path, "company,lob,accident_year,premium", true);
  const int origins = static_cast<int>(csv.header.size()) - 4;
  for (int j = 1; j <= origins; ++j)
    if (csv.header[static_cast<std::size_t>(3 + j)] != std::to_string(j))
      throw DataError(path.string() + ": development columns must be labelled 1.." + std::to_string(origins));
  std::map<Key, int> next_row;
  for (const auto& [line_no, f] : csv.rows) {
    const Key key{f[0], parse_lob(f[1])};
    a.note_company(f[0]);
    const int i = ++next_row[key];
    a.labels[key].push_back(parse_int(f[2], path, line_no));
    a.premiums[key].emplace(i, parse_number(f[3], path, line_no));
    for (int j = 1; j <= origins; ++j) {
      const auto& text = f[static_cast<std::size_t>(3 + j)];
      if (text.empty()) continue;
      a.cells[key].emplace(CellIndex{i, j}, parse_number(text, path, line_no));
    }
  }
  return a.build();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

PortfolioDataset parse_triangle_csv(const std::filesystem::path& path, CsvSchema schema,
                                    const std::optional<std::filesystem::path>& premium_path) {
  if (schema == CsvSchema::kWide) return parse_wide(path);
  if (!premium_path) throw DataError("long CSV schema requires a premium file");
  return parse_long(path, *premium_path);
}

void write_triangle_csv(const PortfolioDataset& data, const std::filesystem::path& values_path,
                        const std::filesystem::path& premium_path) {
  std::ofstream values(values_path);
  std::ofstream prem(premium_path);
  if (!values || !prem) throw DataError("cannot write triangle CSV to '" + values_path.string() + "'");
  values << kLongHeader << '\n';
  prem << kPremiumHeader << '\n';
  for (const auto& pair : data) {
    for (Lob lob : {Lob::kLob1, Lob::kLob2}) {
      const LossTriangle& t = pair[lob];
      for (int i = 1; i <= t.origins(); ++i) {
        prem << t.company() << ',' << to_string(lob) << ',' << i << ',' << format_double(t.premium(i)) << '\n';
        for (int j = 1; j <= t.origins(); ++j)
          if (t.has(i, j))
            values << t.company() << ',' << to_string(lob) << ',' << i << ',' << j << ',' << format_double(t.value(i, j))
                   << '\n';
      }
    }
  }
}

}  // namespace lossres
