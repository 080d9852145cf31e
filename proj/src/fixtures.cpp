#include "thetaskew/fixtures.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "thetaskew/errors.hpp"

namespace thetaskew::fixtures {

namespace {

const char* kHeader = "name,inputs,value,error_bound,oracle,date";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

FixtureSet::FixtureSet(int version, std::vector<Record> records)
    : version_(version), records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) index_[records_[i].name] = i;
}

const Record& FixtureSet::get(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("fixture not found: " + name);
  return records_[it->second];
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

FixtureSet load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open fixtures file " + path);
  std::string line;
  int version = -1;
  bool header_seen = false;
  std::vector<Record> records;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# thetaskew fixtures version ";
      if (line.rfind(tag, 0) == 0) version = std::stoi(line.substr(tag.size()));
      continue;
    }
    if (!header_seen) {
      if (line != kHeader) throw InvalidArgument(path + ": unexpected fixtures header");
      header_seen = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 6)
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected 6 fields");
    records.push_back({f[0], f[1], std::stod(f[2]), std::stod(f[3]), f[4], f[5]});
  }
  if (version < 0) throw InvalidArgument(path + ": missing fixtures version line");
  return {version, std::move(records)};
}

void save(const std::string& path, const std::vector<Record>& records) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write fixtures file " + path);
  out << "# thetaskew fixtures version " << kVersion << "\n" << kHeader << "\n";
  for (const auto& r : records)
    out << csv_quote(r.name) << ',' << csv_quote(r.inputs) << ',' << format_double(r.value) << ','
        << format_double(r.error_bound) << ',' << csv_quote(r.oracle) << ',' << csv_quote(r.date)
        << "\n";
}

}  // namespace thetaskew::fixtures
