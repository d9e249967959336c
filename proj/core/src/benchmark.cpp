/*
 * Copyright 2026 The qnet Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "qnet/error.hpp"
#include "qnet/eval.hpp"
#include "qnet/parallel.hpp"
#include "qnet/random.hpp"

namespace qnet {

BenchReport BenchReport::from_samples(std::string model_id, std::string dtype, std::int64_t warmup,
                                      const std::vector<double>& samples_ms, std::string host) {
  if (samples_ms.empty()) throw IntegrityError("benchmark produced no samples");
  for (double s : samples_ms) {
    if (!(s >= 0.0)) throw IntegrityError("negative or invalid benchmark duration");
  }
  BenchReport r;
  r.model_id = std::move(model_id);
  r.dtype = std::move(dtype);
  r.runs = static_cast<std::int64_t>(samples_ms.size());
  r.warmup = warmup;
  const double n = static_cast<double>(samples_ms.size());
  r.mean_ms = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) / n;
  const auto [lo, hi] = std::minmax_element(samples_ms.begin(), samples_ms.end());
  r.min_ms = *lo;
  r.max_ms = *hi;
  // The rounded mean can stray outside [min, max] by an ulp.
  r.mean_ms = std::clamp(r.mean_ms, r.min_ms, r.max_ms);
  double var = 0.0;
  for (double s : samples_ms) var += (s - r.mean_ms) * (s - r.mean_ms);
  r.std_ms = std::sqrt(var / n);
  r.fps = 1000.0 / r.mean_ms;
  r.host = std::move(host);
  r.verify();
  return r;
}

void BenchReport::verify() const {
  if (runs < 1) throw IntegrityError("benchmark runs must be >= 1");
  if (!(min_ms <= mean_ms && mean_ms <= max_ms)) throw IntegrityError("benchmark mean outside [min, max]");
  if (!(std_ms >= 0.0)) throw IntegrityError("benchmark std is negative");
  if (fps != 1000.0 / mean_ms) throw IntegrityError("fps is not 1000 / mean_ms");
}

std::string host_description() {
  std::string cpu = "unknown cpu";
  std::ifstream in("/proc/cpuinfo");
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) cpu = line.substr(line.find_first_not_of(' ', colon + 1));
      break;
    }
  }
  return cpu + ", " + std::to_string(std::thread::hardware_concurrency()) + " hw threads";
}

namespace {

class ThreadCountGuard {
 public:
  explicit ThreadCountGuard(int n) : saved_(thread_count()) { set_thread_count(n); }
  ~ThreadCountGuard() { set_thread_count(saved_); }
  ThreadCountGuard(const ThreadCountGuard&) = delete;
  ThreadCountGuard& operator=(const ThreadCountGuard&) = delete;

 private:
  int saved_;
};

}  // namespace

BenchReport benchmark(const Predictor& predictor, const Graph& graph, const std::string& model_id,
                      std::int64_t runs, std::int64_t warmup, std::uint64_t seed) {
  if (runs < 1) throw UsageError("benchmark runs must be >= 1");
  if (warmup < 0) throw UsageError("benchmark warmup must be >= 0");
  Tensor input(graph.input_shape(1));
  Rng rng(seed);
  for (auto& v : input.values()) v = uniform(rng, -1.0f, 1.0f);

  ThreadCountGuard single(1);
  for (std::int64_t i = 0; i < warmup; ++i) predictor.predict(input);
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(runs));
  using clock = std::chrono::steady_clock;
  static_assert(clock::is_steady);
  for (std::int64_t i = 0; i < runs; ++i) {
    const auto t0 = clock::now();
    const Tensor out = predictor.predict(input);
    const auto t1 = clock::now();
    if (out.empty()) throw IntegrityError("model produced no output");
    samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return BenchReport::from_samples(model_id, to_string(predictor.dtype()), warmup, samples, host_description());
}

}  // namespace qnet
