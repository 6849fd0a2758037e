#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pvm {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (files, parameters). Maps to CLI exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A solver could not produce a usable answer. Maps to CLI exit code 3.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Hour-resolution timestamp, counted in hours since 1970-01-01T00:00.
struct Timestamp {
  std::int64_t hours = 0;

  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
  Timestamp operator+(std::int64_t h) const { return Timestamp{hours + h}; }
};

/// Calendar date, counted in days since 1970-01-01.
struct Date {
  std::int64_t days = 0;

  friend auto operator<=>(const Date&, const Date&) = default;
  Date operator+(std::int64_t d) const { return Date{days + d}; }
};

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0);
Date date_of(Timestamp ts);
int hour_of_day(Timestamp ts);
Timestamp start_of(Date d);

/// "YYYY-MM-DDTHH:00"
std::string to_string(Timestamp ts);
/// "YYYY-MM-DD"
std::string to_string(Date d);
/// Accepts "YYYY-MM-DDTHH:MM" or "YYYY-MM-DD HH:MM" (minutes must be 00).
Timestamp parse_timestamp(std::string_view text);
Date parse_date(std::string_view text);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// visited exactly once; callers write results into slot i so the merge is
/// order-independent. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

/// Default worker count used when a caller passes 0.
unsigned default_threads();
void set_default_threads(unsigned threads);

/// splitmix64 step; used to derive independent RNG streams from a master seed.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Linearly interpolated quantile (q in [0, 1]); 0 for an empty sample.
double quantile(std::vector<double> v, double q);

std::vector<std::string> split(std::string_view line, char delimiter);
std::string trim(std::string_view text);
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace pvm
