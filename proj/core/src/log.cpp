#include "fredholm/log.hpp"

#include <iostream>
#include <mutex>

namespace fredholm::log {
namespace {

std::mutex g_mutex;
Sink g_sink;

}  // namespace

void set_warning_sink(Sink sink) {
  std::lock_guard lock(g_mutex);
  g_sink = std::move(sink);
}

void warn(std::string_view message) {
  std::lock_guard lock(g_mutex);
  if (g_sink) {
    g_sink(message);
  } else {
    std::cerr << "[fredholm] warning: " << message << '\n';
  }
}

}  // namespace fredholm::log
