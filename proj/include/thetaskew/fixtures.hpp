#pragma once

#include <map>
#include <string>
#include <vector>

namespace thetaskew::fixtures {

inline constexpr int kVersion = 1;

struct Record {
  std::string name;
  std::string inputs;
  double value = 0.0;
  double error_bound = 0.0;
  std::string oracle;
  std::string date;
};

class FixtureSet {
 public:
  FixtureSet() = default;
  FixtureSet(int version, std::vector<Record> records);

  int version() const noexcept { return version_; }
  const std::vector<Record>& records() const noexcept { return records_; }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  /// Throws InvalidArgument for unknown names.
  const Record& get(const std::string& name) const;
  double value(const std::string& name) const { return get(name).value; }

 private:
  int version_ = 0;
  std::vector<Record> records_;
  std::map<std::string, std::size_t> index_;
};

/// CSV with a "# thetaskew fixtures version N" first line and the header
/// name,inputs,value,error_bound,oracle,date.
FixtureSet load(const std::string& path);
void save(const std::string& path, const std::vector<Record>& records);

/// RFC 4180 quoting for one field.
std::string csv_quote(const std::string& field);

/// A double at 17 significant digits ("%.17g"), which round-trips exactly.
std::string format_double(double v);

}  // namespace thetaskew::fixtures
