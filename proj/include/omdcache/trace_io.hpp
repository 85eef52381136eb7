#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "omdcache/core.hpp"

// Plain-text trace files.  Layout:
//
//   #omdtrace v1 N=<int> R=<int> h=<int> T=<int> B=<int>
//   #pop <start_slot> <p_0> ... <p_{N-1}>      (optional, ascending slots)
//   <file>:<count> <file>:<count> ...          (one line per slot, B lines)
//
// A `#pop` line precedes the batch line of the first slot it applies to.
// File ids are 0-based and strictly ascending within a line; counts sum to R
// and never exceed h.  The reader rejects any violation outright.

namespace omdcache {

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline long long parse_ll(const std::string& tok, const char* what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(tok, &pos);
    if (pos != tok.size()) throw InvalidInput("");
    return v;
  } catch (const std::exception&) {
    throw InvalidInput(std::string("trace: bad integer for ") + what + ": '" + tok + "'");
  }
}

inline double parse_double(const std::string& tok, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw InvalidInput("");
    return v;
  } catch (const std::exception&) {
    throw InvalidInput(std::string("trace: bad number for ") + what + ": '" + tok + "'");
  }
}

}  // namespace detail

inline void write_trace(const Trace& trace, std::ostream& out) {
  trace.validate();
  out << "#omdtrace v1 N=" << trace.catalog_size << " R=" << trace.batch_size
      << " h=" << trace.max_multiplicity << " T=" << trace.horizon
      << " B=" << trace.num_slots() << "\n";
  std::size_t pop_idx = 0;
  for (long long slot = 0; slot < trace.num_slots(); ++slot) {
    while (pop_idx < trace.popularity.size() &&
           trace.popularity[pop_idx].first == slot) {
      out << "#pop " << slot;
      for (double p : trace.popularity[pop_idx].second) {
        out << ' ' << detail::format_double(p);
      }
      out << "\n";
      ++pop_idx;
    }
    const RequestBatch& b = trace.batches[static_cast<std::size_t>(slot)];
    bool first = true;
    for (const auto& [file, count] : b.counts) {
      if (!first) out << ' ';
      out << file << ':' << count;
      first = false;
    }
    out << "\n";
  }
}

inline void write_trace_file(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("trace: cannot open '" + path + "' for writing");
  write_trace(trace, out);
  if (!out) throw InvalidInput("trace: write to '" + path + "' failed");
}

inline Trace read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("trace: empty input");

  Trace trace;
  long long declared_batches = -1;
  {
    std::istringstream hdr(line);
    std::string magic;
    hdr >> magic;
    if (magic != "#omdtrace") throw InvalidInput("trace: missing #omdtrace header");
    std::string version;
    hdr >> version;
    if (version != "v1") throw InvalidInput("trace: unsupported version '" + version + "'");
    std::string field;
    while (hdr >> field) {
      const std::size_t eq = field.find('=');
      if (eq == std::string::npos) throw InvalidInput("trace: bad header field '" + field + "'");
      const std::string key = field.substr(0, eq);
      const long long value = detail::parse_ll(field.substr(eq + 1), key.c_str());
      if (key == "N") trace.catalog_size = static_cast<int>(value);
      else if (key == "R") trace.batch_size = static_cast<int>(value);
      else if (key == "h") trace.max_multiplicity = static_cast<int>(value);
      else if (key == "T") trace.horizon = value;
      else if (key == "B") declared_batches = value;
      else throw InvalidInput("trace: unknown header field '" + key + "'");
    }
    if (trace.catalog_size <= 0 || trace.batch_size <= 0 ||
        trace.max_multiplicity <= 0 || trace.horizon <= 0 || declared_batches < 0) {
      throw InvalidInput("trace: header must declare positive N, R, h, T and B");
    }
  }

  long long line_no = 1;
  long long slot = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream pop(line);
      std::string tag;
      pop >> tag;
      if (tag != "#pop") {
        throw InvalidInput("trace: unknown directive at line " + std::to_string(line_no));
      }
      std::string tok;
      if (!(pop >> tok)) throw InvalidInput("trace: #pop missing start slot");
      const long long start = detail::parse_ll(tok, "#pop start slot");
      if (start != slot) {
        throw InvalidInput("trace: #pop at line " + std::to_string(line_no) +
                           " must precede the batch of its start slot");
      }
      std::vector<double> pmf;
      pmf.reserve(static_cast<std::size_t>(trace.catalog_size));
      while (pop >> tok) pmf.push_back(detail::parse_double(tok, "#pop entry"));
      if (static_cast<int>(pmf.size()) != trace.catalog_size) {
        throw InvalidInput("trace: #pop at line " + std::to_string(line_no) +
                           " has wrong vector length");
      }
      trace.popularity.emplace_back(start, std::move(pmf));
      continue;
    }

    RequestBatch batch;
    batch.batch_size = trace.batch_size;
    batch.max_multiplicity = trace.max_multiplicity;
    std::istringstream body(line);
    std::string tok;
    while (body >> tok) {
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos) {
        throw InvalidInput("trace: bad request token '" + tok + "' at line " +
                           std::to_string(line_no));
      }
      const long long file = detail::parse_ll(tok.substr(0, colon), "file id");
      const long long count = detail::parse_ll(tok.substr(colon + 1), "count");
      batch.counts.emplace_back(static_cast<int>(file), static_cast<int>(count));
    }
    try {
      batch.validate(trace.catalog_size);
    } catch (const InvalidInput& e) {
      throw InvalidInput(std::string(e.what()) + " (line " + std::to_string(line_no) + ")");
    }
    trace.batches.push_back(std::move(batch));
    ++slot;
  }

  if (slot != declared_batches) {
    throw InvalidInput("trace: header declares B=" + std::to_string(declared_batches) +
                       " but found " + std::to_string(slot) + " batch lines");
  }
  trace.validate();
  return trace;
}

inline Trace read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("trace: cannot open '" + path + "'");
  return read_trace(in);
}

}  // namespace omdcache
