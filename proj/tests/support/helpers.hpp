#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "corpus_expectations.hpp"
#include "fluxvm/bytecode/assembler.hpp"
#include "fluxvm/corpus.hpp"
#include "fluxvm/vm/exec_context.hpp"
#include "fluxvm/vm/runtime_image.hpp"

namespace fluxvm::test {

/// Independent iterative Fibonacci.
inline std::int64_t fib_oracle(std::int64_t n) { return fib_iter(n); }

/// Number of classicfibo invocations made while computing fib(n), the
/// top-level call included, counted by an instrumented host recursion.
inline std::uint64_t fib_calls_oracle(std::int64_t n) {
  std::uint64_t calls = 0;
  auto rec = [&](auto& self, std::int64_t k) -> std::int64_t {
    ++calls;
    return k < 2 ? k : self(self, k - 1) + self(self, k - 2);
  };
  rec(rec, n);
  return calls;
}

/// An image whose PRINT output is collected in `out`.
struct CapturedImage {
  std::shared_ptr<std::string> out = std::make_shared<std::string>();
  std::unique_ptr<RuntimeImage> image;

  explicit CapturedImage(Semantics semantics = Semantics::Volatile) {
    ImageOptions o;
    o.site_semantics = semantics;
    auto sink = out;
    o.sink = [sink](std::string_view s) { sink->append(s); };
    image = std::make_unique<RuntimeImage>(std::move(o));
  }

  RuntimeImage& operator*() { return *image; }
  RuntimeImage* operator->() { return image.get(); }

  std::string take() {
    std::string s = std::move(*out);
    out->clear();
    return s;
  }
};

struct Outcome {
  std::string out;
  Value result;
};

/// Loads one corpus program (and optionally the advice module first) and
/// runs its entry.
inline Outcome run_corpus(std::string_view name, bool transform, const std::vector<Value>& args) {
  CapturedImage img;
  img->load(corpus_module(name), transform);
  auto entry = corpus_module(name).entry_name().value_or("main");
  Value r = run(*img, entry, args);
  return {img.take(), r};
}

inline std::vector<Value> ints(std::initializer_list<std::int64_t> xs) {
  std::vector<Value> v;
  for (auto x : xs) v.push_back(Value::integer(x));
  return v;
}

}  // namespace fluxvm::test
