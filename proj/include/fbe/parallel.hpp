#pragma once

namespace fbe {

/// Caps OpenMP worker threads (n <= 0 restores the runtime default).
/// Results of every kernel in this library are independent of this setting.
void set_num_threads(int n);
int num_threads();

/// Restores the previous thread cap on scope exit.
class ThreadScope {
 public:
  explicit ThreadScope(int n) : previous_(num_threads()) { set_num_threads(n); }
  ~ThreadScope() { set_num_threads(previous_); }
  ThreadScope(const ThreadScope&) = delete;
  ThreadScope& operator=(const ThreadScope&) = delete;

 private:
  int previous_;
};

}  // namespace fbe
