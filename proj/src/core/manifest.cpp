// Copyright 2026 The ZED Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "manifest.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "errors.hpp"

namespace zed {

const char kFeatureTableHeader[] =
    "path,label,generator,group,nll0,nll1,nll2,h0,h1,h2,d0,d1,d2,delta01,"
    "abs_d0,abs_delta01";

namespace {

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& path, int line) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw DataError(path + ":" + std::to_string(line) +
                    ": not a number: " + s);
  }
  return v;
}

}  // namespace

CorpusManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path);
  std::filesystem::path base = std::filesystem::path(path).parent_path();

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty manifest " + path);
  if (strip_cr(line) != "path,label,generator,group") {
    throw DataError("manifest " + path +
                    " must start with header `path,label,generator,group`");
  }

  CorpusManifest m;
  std::set<std::string> seen;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv(line);
    if (f.size() != 4) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected 4 fields, got " + std::to_string(f.size()));
    }
    ManifestEntry e;
    if (f[1] == "real") {
      e.synthetic = false;
    } else if (f[1] == "synthetic") {
      e.synthetic = true;
    } else {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": label must be `real` or `synthetic`, got `" + f[1] +
                      "`");
    }
    if (!seen.insert(f[0]).second) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": duplicate path " + f[0]);
    }
    std::filesystem::path p(f[0]);
    e.path = p.is_absolute() ? p.string() : (base / p).string();
    e.generator = f[2];
    e.group = f[3];
    m.entries.push_back(std::move(e));
  }
  return m;
}

void save_feature_table(const std::vector<FeatureRow>& rows,
                        const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw DataError("cannot write " + path);
  std::fprintf(f, "%s\n", kFeatureTableHeader);
  for (const FeatureRow& r : rows) {
    std::fprintf(f, "%s,%s,%s,%s", r.path.c_str(), r.label.c_str(),
                 r.generator.c_str(), r.group.c_str());
    double vals[12] = {r.nll[0],   r.nll[1],          r.nll[2],
                       r.h[0],     r.h[1],            r.h[2],
                       r.d(0),     r.d(1),            r.d(2),
                       r.delta01(), std::abs(r.d(0)), std::abs(r.delta01())};
    for (double v : vals) std::fprintf(f, ",%.12g", v);
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw DataError("short write to " + path);
}

std::vector<FeatureRow> load_feature_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature table " + path);
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kFeatureTableHeader) {
    throw DataError("feature table " + path + " has an unexpected header");
  }
  std::vector<FeatureRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv(line);
    if (f.size() != 16) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected 16 fields, got " + std::to_string(f.size()));
    }
    FeatureRow r;
    r.path = f[0];
    r.label = f[1];
    r.generator = f[2];
    r.group = f[3];
    for (int l = 0; l < 3; ++l) r.nll[l] = parse_double(f[4 + l], path, lineno);
    for (int l = 0; l < 3; ++l) r.h[l] = parse_double(f[7 + l], path, lineno);
    // Columns 10..15 are derived; re-derived from nll/h on load.
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace zed
