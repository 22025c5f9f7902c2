#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fluxvm::test {

/// Output and return value of a corpus program, worked out by hand from its
/// source (array contents from an independent recurrence, fib from the
/// iterative oracle).
struct Expectation {
  std::string_view name;
  std::string out;
  std::int64_t result;
};

inline std::int64_t fib_iter(std::int64_t n) {
  std::int64_t a = 0, b = 1;
  for (std::int64_t i = 0; i < n; ++i) {
    std::int64_t t = a + b;
    a = b;
    b = t;
  }
  return a;
}

inline std::vector<Expectation> corpus_expectations() {
  return {
      {"arith", "3\n2\n-2\n-3\n-9223372036854775808\n18.0\n0.25\ntrue\ntrue\n", 42},
      {"arrays",
       "[34, 95, 46, 79, 35, 29, 37, 91, 19, 18, 84, 93]\n[18, 19, 29, 34, 35, 37, 46, 79, 84, 91, 93, 95]\n", 113},
      {"classicfibo", std::to_string(fib_iter(15)) + "\n", fib_iter(15)},
      {"counter_loop", "", 1000},
      {"iface", "Good day, Ada\nhi Bob\n3\n", 3},
      {"linkedlist", "6 5 4 3 2 1 \n1 2 3 4 5 6 \n", 21},
      {"listener", "count 1\ncount 2\npicture 1\ncount 3\ncount 4\npicture 0\ncount 5\ncount 6\n", 6},
      {"loops", "5050\n3628800\n21\n", 21},
      {"points", "Point{x=3, y=4}\nPoint{x=2, y=6}\n25\n", 40},
      {"recursion", "false\ntrue\n9\n", 9},
      {"shapes", "rect area=12\n[square area=25]\ntri area=9\n", 46},
      {"strings", "A B C\nn=42, f=1.5, b=true\ntab\tquote\" done\n16\n", 16},
  };
}

}  // namespace fluxvm::test
