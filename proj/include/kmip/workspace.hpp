// Copyright 2026 The kmip Authors. All Rights Reserved.
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

#pragma once

#include <atomic>
#include <cstddef>
#include <utility>

namespace kmip {

// Byte accounting for kernel buffers. Kernels charge every scratch and output
// buffer they hold; the peak is what the memory benchmarks report.
class Workspace {
 public:
  class Charge {
   public:
    Charge() = default;
    Charge(Workspace* ws, std::size_t bytes) : ws_(ws), bytes_(bytes) {
      if (ws_ != nullptr) ws_->acquire(bytes_);
    }
    Charge(const Charge&) = delete;
    Charge& operator=(const Charge&) = delete;
    Charge(Charge&& o) noexcept
        : ws_(std::exchange(o.ws_, nullptr)), bytes_(std::exchange(o.bytes_, 0)) {}
    Charge& operator=(Charge&& o) noexcept {
      if (this != &o) {
        release();
        ws_ = std::exchange(o.ws_, nullptr);
        bytes_ = std::exchange(o.bytes_, 0);
      }
      return *this;
    }
    ~Charge() { release(); }

    void release() noexcept {
      if (ws_ != nullptr) ws_->release(bytes_);
      ws_ = nullptr;
      bytes_ = 0;
    }
    std::size_t bytes() const noexcept { return bytes_; }

   private:
    Workspace* ws_ = nullptr;
    std::size_t bytes_ = 0;
  };

  Workspace() = default;
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  [[nodiscard]] Charge charge(std::size_t bytes) { return Charge(this, bytes); }

  template <typename T>
  [[nodiscard]] Charge charge_elems(std::size_t n) {
    return Charge(this, n * sizeof(T));
  }

  std::size_t live_bytes() const noexcept {
    return live_.load(std::memory_order_relaxed);
  }
  std::size_t peak_bytes() const noexcept {
    return peak_.load(std::memory_order_relaxed);
  }

  // Starts a new measurement scope: the peak collapses to the current level.
  void reset_peak() noexcept {
    peak_.store(live_.load(std::memory_order_relaxed), std::memory_order_relaxed);
  }

 private:
  void acquire(std::size_t bytes) noexcept {
    const std::size_t now =
        live_.fetch_add(bytes, std::memory_order_relaxed) + bytes;
    std::size_t seen = peak_.load(std::memory_order_relaxed);
    while (now > seen &&
           !peak_.compare_exchange_weak(seen, now, std::memory_order_relaxed)) {
    }
  }
  void release(std::size_t bytes) noexcept {
    live_.fetch_sub(bytes, std::memory_order_relaxed);
  }

  std::atomic<std::size_t> live_{0};
  std::atomic<std::size_t> peak_{0};
};

}  // namespace kmip
