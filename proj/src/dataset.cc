//
// Copyright 2026 The CAPE-DP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "cape/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cape/error.h"

namespace cape {
namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\"");
  return s.substr(b, e - b + 1);
}

bool IsMissing(const std::string& cell) {
  return cell.empty() || cell == "?" || cell == "NA" || cell == "nan" || cell == "NaN";
}

double MaxAbs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

std::vector<int> Permutation(int n, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

}  // namespace

NormalizationReport NormalizeFeatures(Eigen::MatrixXd* x) {
  NormalizationReport report;
  const Eigen::Index d = x->cols();
  report.feature_min.resize(d);
  report.feature_max.resize(d);
  if (x->rows() == 0) return report;
  for (Eigen::Index c = 0; c < d; ++c) {
    const double lo = x->col(c).minCoeff();
    const double hi = x->col(c).maxCoeff();
    report.feature_min[c] = lo;
    report.feature_max[c] = hi;
    if (hi > lo) {
      x->col(c) = ((x->col(c).array() - lo) * (2.0 / (hi - lo)) - 1.0).matrix();
    } else {
      x->col(c).setZero();
    }
  }
  const double max_norm = x->rowwise().norm().maxCoeff();
  if (max_norm > 0.0) {
    *x /= max_norm;
    report.l2_scale = max_norm;
  }
  return report;
}

RegressionData GenSyntheticRegression(int dim, int num_samples, double noise_sd,
                                      std::uint64_t seed) {
  if (dim < 1 || num_samples < 1) throw Error(ErrorCode::kParameter, "need D, N >= 1");
  if (!(noise_sd >= 0.0)) throw Error(ErrorCode::kParameter, "noise_sd must be >= 0");
  Rng x_rng = Rng(seed).Stream(40);
  Rng w_rng = Rng(seed).Stream(41);
  Rng e_rng = Rng(seed).Stream(42);

  RegressionData out;
  Eigen::MatrixXd& x = out.data.x;
  x.resize(num_samples, dim);
  for (int n = 0; n < num_samples; ++n) {
    for (int c = 0; c < dim; ++c) x(n, c) = x_rng.Normal();
  }
  out.data.report = NormalizeFeatures(&x);

  Eigen::VectorXd w_star(dim);
  for (int c = 0; c < dim; ++c) w_star(c) = w_rng.Normal();
  const Eigen::VectorXd clean = x * w_star;
  Eigen::VectorXd y = clean;
  for (int n = 0; n < num_samples; ++n) y(n) += noise_sd * e_rng.Normal();
  const double scale = MaxAbs(y) > 0.0 ? MaxAbs(y) : 1.0;
  out.data.y = y / scale;
  out.data.report.y_scale = scale;
  out.w_true = x.completeOrthogonalDecomposition().solve(clean / scale);
  return out;
}

ClassData GenSyntheticClasses(int dim, int num_samples, double separation, std::uint64_t seed,
                              double train_fraction) {
  if (dim < 1 || num_samples < 2) throw Error(ErrorCode::kParameter, "need D >= 1, N >= 2");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::kParameter, "train fraction must be in (0, 1)");
  }
  Rng rng = Rng(seed).Stream(43);
  const double shift = 0.5 * separation / std::sqrt(static_cast<double>(dim));
  Eigen::MatrixXd x(num_samples, dim);
  Eigen::VectorXd y(num_samples);
  for (int n = 0; n < num_samples; ++n) {
    y(n) = n % 2;
    const double sign = y(n) == 1.0 ? 1.0 : -1.0;
    for (int c = 0; c < dim; ++c) x(n, c) = rng.Normal() + sign * shift;
  }
  Rng split_rng = Rng(seed).Stream(44);
  const std::vector<int> perm = Permutation(num_samples, split_rng);
  const int n_train = std::clamp(static_cast<int>(std::lround(train_fraction * num_samples)), 1,
                                 num_samples - 1);
  ClassData out;
  out.train.x.resize(n_train, dim);
  out.train.y.resize(n_train);
  out.test.x.resize(num_samples - n_train, dim);
  out.test.y.resize(num_samples - n_train);
  for (int i = 0; i < num_samples; ++i) {
    ClassSite& dst = i < n_train ? out.train : out.test;
    const int row = i < n_train ? i : i - n_train;
    dst.x.row(row) = x.row(perm[i]);
    dst.y(row) = y(perm[i]);
  }
  return out;
}

DatasetBundle LoadCsv(const std::string& path, const std::string& target_column,
                      const LossSpec& spec) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kData, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || Trim(line).empty()) {
    throw Error(ErrorCode::kData, "empty file: " + path);
  }
  std::vector<std::string> header = SplitCsvLine(line);
  for (auto& h : header) h = Trim(h);
  const auto it = std::find(header.begin(), header.end(), target_column);
  if (it == header.end()) throw Error(ErrorCode::kData, "missing target column " + target_column);
  const auto target = static_cast<std::size_t>(it - header.begin());
  const std::size_t width = header.size();

  std::vector<std::vector<double>> rows;
  int rejected = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    std::vector<std::string> cells = SplitCsvLine(line);
    if (cells.size() != width) {
      throw Error(ErrorCode::kData, "line " + std::to_string(line_no) + " has " +
                                        std::to_string(cells.size()) + " cells, expected " +
                                        std::to_string(width));
    }
    std::vector<double> values(width);
    bool missing = false;
    for (std::size_t c = 0; c < width; ++c) {
      const std::string cell = Trim(cells[c]);
      if (IsMissing(cell)) {
        missing = true;
        continue;
      }
      std::size_t used = 0;
      try {
        values[c] = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size()) {
        throw Error(ErrorCode::kData, "non-numeric cell '" + cell + "' at line " +
                                          std::to_string(line_no) + ", column " + header[c]);
      }
      if (std::isnan(values[c])) missing = true;
    }
    if (missing) {
      ++rejected;
      continue;
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw Error(ErrorCode::kData, "no complete data rows in " + path);

  DatasetBundle out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.x.resize(n, static_cast<Eigen::Index>(width - 1));
  out.y.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == target) {
        out.y(r) = rows[r][c];
      } else {
        out.x(r, col++) = rows[r][c];
      }
    }
  }
  out.report = NormalizeFeatures(&out.x);
  out.report.rejected_rows = rejected;
  if (spec.kind == LossKind::kLinearRegression) {
    const double scale = MaxAbs(out.y);
    if (scale > 0.0) {
      out.y /= scale;
      out.report.y_scale = scale;
    }
  } else {
    for (Eigen::Index r = 0; r < n; ++r) {
      if (out.y(r) != 0.0 && out.y(r) != 1.0) {
        throw Error(ErrorCode::kData, "logistic target must be 0/1");
      }
    }
  }
  return out;
}

DatasetBundle Subsample(const DatasetBundle& data, int num_samples, Rng& rng) {
  if (num_samples < 1 || num_samples > data.num_samples()) {
    throw Error(ErrorCode::kParameter, "subsample size out of range");
  }
  const std::vector<int> perm = Permutation(data.num_samples(), rng);
  DatasetBundle out;
  out.report = data.report;
  out.x.resize(num_samples, data.dim());
  out.y.resize(num_samples);
  for (int i = 0; i < num_samples; ++i) {
    out.x.row(i) = data.x.row(perm[i]);
    out.y(i) = data.y(perm[i]);
  }
  return out;
}

std::vector<SiteData> SplitSites(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int num_sites,
                                 Rng& rng, SiteData* kept) {
  if (x.rows() != y.size()) throw Error(ErrorCode::kDimensionMismatch, "X and y differ in rows");
  if (num_sites < 1) throw Error(ErrorCode::kParameter, "S must be >= 1");
  const int n = static_cast<int>(x.rows());
  const int per_site = n / num_sites;
  if (per_site < 1) throw Error(ErrorCode::kData, "fewer samples than sites");
  const std::vector<int> perm = Permutation(n, rng);
  std::vector<SiteData> sites(num_sites);
  for (int s = 0; s < num_sites; ++s) {
    sites[s].x.resize(per_site, x.cols());
    sites[s].y.resize(per_site);
    for (int i = 0; i < per_site; ++i) {
      const int src = perm[s * per_site + i];
      sites[s].x.row(i) = x.row(src);
      sites[s].y(i) = y(src);
    }
  }
  if (kept != nullptr) {
    kept->x.resize(per_site * num_sites, x.cols());
    kept->y.resize(per_site * num_sites);
    for (int s = 0; s < num_sites; ++s) {
      kept->x.middleRows(s * per_site, per_site) = sites[s].x;
      kept->y.segment(s * per_site, per_site) = sites[s].y;
    }
  }
  return sites;
}

}  // namespace cape
