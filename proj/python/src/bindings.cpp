#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "fidstore/bench.hpp"
#include "fidstore/error.hpp"
#include "fidstore/fid.hpp"
#include "fidstore/mapping_store.hpp"
#include "fidstore/values.hpp"
#include "fidstore/vfs.hpp"
#include "fidstore/zone_sim.hpp"

namespace py = pybind11;
using namespace fidstore;

namespace {

Bytes to_bytes(const py::bytes& b) {
  const std::string s = b;
  return Bytes(s.begin(), s.end());
}

py::bytes from_bytes(const Bytes& b) {
  return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

py::object from_json(const std::string& text) {
  return py::module_::import("json").attr("loads")(text);
}

PartitionKind parse_kind(const std::string& s) {
  if (s == "temporary") return PartitionKind::Temporary;
  if (s == "permanent") return PartitionKind::Permanent;
  fail(Errc::InvalidArgument, "partition kind must be 'temporary' or 'permanent'");
}

ColumnType parse_column(const std::string& s) {
  if (s == "int") return ColumnType::PlainInt;
  if (s == "bytes") return ColumnType::PlainBytes;
  if (s == "secret_int") return ColumnType::SensitiveInt;
  if (s == "secret_bytes") return ColumnType::SensitiveBytes;
  fail(Errc::InvalidArgument, "column type must be int, bytes, secret_int or secret_bytes");
}

OpCode parse_cmp(const std::string& s) {
  if (s == "<" || s == "lt") return OpCode::CmpLt;
  if (s == "=" || s == "==" || s == "eq") return OpCode::CmpEq;
  if (s == ">" || s == "gt") return OpCode::CmpGt;
  fail(Errc::InvalidArgument, "comparison must be <, = or >");
}

CrashTarget parse_target(const std::string& s) {
  if (s == "privacy") return CrashTarget::PrivacyZone;
  if (s == "integrity") return CrashTarget::IntegrityZone;
  if (s == "both") return CrashTarget::Both;
  fail(Errc::InvalidArgument, "target must be privacy, integrity or both");
}

CrashKind parse_crash_kind(const std::string& s) {
  for (auto k : kAllCrashKinds)
    if (crash_kind_name(k) == s) return k;
  fail(Errc::InvalidArgument, "unknown crash point " + s);
}

py::dict stats_dict(const StoreStats& s) {
  py::dict d;
  d["live_count"] = s.live_count;
  d["deleted_count"] = s.deleted_count;
  d["fresh_allocations"] = s.fresh_allocations;
  d["reused_slots"] = s.reused_slots;
  d["bytes_data"] = s.bytes_data;
  d["bytes_metadata"] = s.bytes_metadata;
  d["cache_hits"] = s.cache_hits;
  d["cache_misses"] = s.cache_misses;
  d["puts"] = s.puts;
  d["gets"] = s.gets;
  d["deletes"] = s.deletes;
  d["promotes"] = s.promotes;
  d["seals"] = s.seals;
  d["opens"] = s.opens;
  d["checkpoints"] = s.checkpoints;
  return d;
}

py::dict invariant_dict(const InvariantReport& r) {
  py::dict d;
  d["holds"] = r.holds;
  d["checked"] = r.checked;
  d["violations"] = r.violations;
  d["orphans"] = r.orphans;
  py::list dangling;
  for (auto f : r.dangling) dangling.append(f.raw);
  d["dangling"] = dangling;
  return d;
}

py::dict op_stats(const OpStats& s) {
  py::dict d;
  d["median_ns"] = s.median_ns;
  d["p99_ns"] = s.p99_ns;
  d["median_cycles"] = s.median_cycles;
  d["p99_cycles"] = s.p99_cycles;
  return d;
}

// A mapping store on its own disk: in memory, or a directory when a path is given.
class PyStore {
 public:
  PyStore(std::optional<std::string> path, unsigned prefix_bits, std::size_t cache_pages) {
    if (path)
      disk_ = std::make_unique<PosixVfs>(*path);
    else
      disk_ = std::make_unique<SimVfs>("store");
    cfg_.fid = FidConfig(prefix_bits);
    cfg_.cache_pages = cache_pages;
    open();
  }

  MappingStore& store() { return *store_; }
  bool simulated() const { return dynamic_cast<SimVfs*>(disk_.get()) != nullptr; }

  void crash() {
    store_->crash();
    if (auto* sim = dynamic_cast<SimVfs*>(disk_.get())) sim->crash();
  }

  void reopen() {
    store_.reset();
    open();
  }

 private:
  void open() { store_ = std::make_unique<MappingStore>(*disk_, cfg_); }

  StoreConfig cfg_;
  std::unique_ptr<Vfs> disk_;
  std::unique_ptr<MappingStore> store_;
};

// Client-facing database over the simulated two-zone topology. Sensitive
// values are encrypted on the way in and revealed on the way out.
class PyDatabase {
 public:
  PyDatabase(bool pad_sensitive, std::size_t pad_width, std::size_t batch_size) {
    TopologyConfig cfg;
    cfg.db.pad_sensitive = pad_sensitive;
    cfg.db.pad_width = pad_width;
    cfg.batch_size = batch_size;
    sim_ = std::make_unique<ZoneSim>(cfg);
  }

  ZoneSim& sim() { return *sim_; }

  std::uint32_t create_table(const std::string& name, const std::vector<std::pair<std::string, std::string>>& cols) {
    Schema schema;
    for (const auto& [n, t] : cols) schema.push_back({n, parse_column(t)});
    return sim_->db().create_table(name, std::move(schema));
  }

  std::uint32_t table(const std::string& name) const {
    auto id = sim_->db().table_id(name);
    if (!id) fail(Errc::UnknownTable, name);
    return *id;
  }

  std::vector<Param> params(std::uint32_t t, const py::list& values) {
    const auto& schema = sim_->db().schema(t);
    if (values.size() != schema.size()) fail(Errc::SchemaMismatch, "value count does not match the schema");
    std::vector<Param> out;
    for (std::size_t i = 0; i < schema.size(); ++i) {
      const py::handle v = values[i];
      switch (schema[i].type) {
        case ColumnType::PlainInt:
          out.emplace_back(v.cast<std::int64_t>());
          break;
        case ColumnType::PlainBytes:
          out.emplace_back(to_bytes(v.cast<py::bytes>()));
          break;
        case ColumnType::SensitiveInt:
          out.emplace_back(sim_->client().encrypt_int(v.cast<std::int64_t>()));
          break;
        case ColumnType::SensitiveBytes: {
          const std::string s = py::isinstance<py::bytes>(v) ? std::string(v.cast<py::bytes>()) : v.cast<std::string>();
          out.emplace_back(sim_->client().encrypt_text(s, width()));
          break;
        }
      }
    }
    return out;
  }

  py::list reveal_rows(TxnId txn, std::uint32_t t, const std::vector<Row>& rows) {
    const auto& schema = sim_->db().schema(t);
    std::vector<Fid> fids;
    for (const auto& r : rows)
      for (const auto& c : r.cells)
        if (auto f = std::get_if<Fid>(&c)) fids.push_back(*f);
    const auto envs = fids.empty() ? std::vector<ClientEnvelope>{} : sim_->db().reveal(txn, fids);
    std::size_t next = 0;
    py::list out;
    for (const auto& r : rows) {
      py::list cells;
      for (std::size_t i = 0; i < r.cells.size(); ++i) {
        const auto& c = r.cells[i];
        if (auto v = std::get_if<std::int64_t>(&c)) {
          cells.append(*v);
        } else if (auto b = std::get_if<Bytes>(&c)) {
          cells.append(from_bytes(*b));
        } else if (schema[i].type == ColumnType::SensitiveInt) {
          cells.append(sim_->client().decrypt_int(envs[next++]));
        } else {
          const auto text = sim_->client().decrypt_text(envs[next++], width());
          cells.append(py::bytes(text));
        }
      }
      out.append(py::make_tuple(r.row_id, cells));
    }
    return out;
  }

  std::int64_t reveal_int(TxnId txn, Fid f) {
    return sim_->client().decrypt_int(sim_->db().reveal(txn, {f}).at(0));
  }

  ClientEnvelope seal_int(std::int64_t v) { return sim_->client().encrypt_int(v); }

 private:
  std::size_t width() const {
    const auto& c = sim_->config().db;
    return c.pad_sensitive ? c.pad_width : 0;
  }

  std::unique_ptr<ZoneSim> sim_;
};

WorkloadSpec make_spec(const std::string& mode, const std::string& dist, double theta, std::uint64_t ops,
                       std::uint64_t rows, double cache_fraction, std::size_t batch) {
  WorkloadSpec s;
  s.mode = parse_mode(mode);
  s.distribution = parse_distribution(dist);
  s.theta = theta;
  s.duration_ops = ops;
  s.rows_per_table = rows;
  s.cache_fraction = cache_fraction;
  s.batch_size = batch;
  s.validate();
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Field-identifier store for confidential databases";

  static py::exception<Error> error_type(m, "FidStoreError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = error_type;
      py::object inst = err(std::string(errc_name(e.code())), e.what());
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  m.def(
      "encode_fid",
      [](std::uint64_t partition, std::uint64_t offset, unsigned prefix_bits) {
        return encode_fid(FidConfig(prefix_bits), partition, offset).raw;
      },
      py::arg("partition"), py::arg("offset"), py::arg("prefix_bits") = FidConfig::kDefaultPrefixBits);
  m.def(
      "decode_fid",
      [](std::uint64_t fid, unsigned prefix_bits) {
        const auto p = decode_fid(FidConfig(prefix_bits), Fid{fid});
        return py::make_tuple(p.partition, p.offset);
      },
      py::arg("fid"), py::arg("prefix_bits") = FidConfig::kDefaultPrefixBits);

  py::class_<PyStore>(m, "Store")
      .def(py::init<std::optional<std::string>, unsigned, std::size_t>(), py::arg("path") = py::none(),
           py::arg("prefix_bits") = FidConfig::kDefaultPrefixBits, py::arg("cache_pages") = 0)
      .def(
          "create_partition",
          [](PyStore& s, const std::string& kind, std::optional<std::uint32_t> width) {
            return s.store().create_partition(parse_kind(kind),
                                              width ? ValueLayout::fixed(*width) : ValueLayout::varlen());
          },
          py::arg("kind") = "permanent", py::arg("width") = py::none())
      .def("put", [](PyStore& s, std::uint32_t part, const py::bytes& v) { return s.store().put(part, to_bytes(v)).raw; })
      .def("get",
           [](PyStore& s, std::uint64_t fid) -> py::object {
             auto v = s.store().get(Fid{fid});
             if (!v) return py::none();
             return from_bytes(*v);
           })
      .def("is_live", [](PyStore& s, std::uint64_t fid) { return s.store().is_live(Fid{fid}); })
      .def("delete", [](PyStore& s, std::uint64_t fid) { s.store().remove(Fid{fid}); })
      .def("promote",
           [](PyStore& s, std::uint64_t fid, std::uint32_t part) { return s.store().promote(Fid{fid}, part).raw; })
      .def("drop_temporary", [](PyStore& s, std::uint32_t part) { return s.store().drop_temporary(part); })
      .def("flush", [](PyStore& s) { return s.store().flush_log(); })
      .def("checkpoint", [](PyStore& s) { s.store().checkpoint_truncate(); })
      .def("live_fids",
           [](PyStore& s, std::uint32_t part) {
             std::vector<std::uint64_t> out;
             for (auto f : s.store().live_fids(part)) out.push_back(f.raw);
             return out;
           })
      .def("crash", &PyStore::crash, "Drop volatile state; unsynced bytes are lost on an in-memory disk.")
      .def("recover", [](PyStore& s) { return s.store().recover(); })
      .def("reopen", &PyStore::reopen)
      .def("stats", [](PyStore& s) { return stats_dict(s.store().stats()); })
      .def("crypto_invocations", [](PyStore& s) { return s.store().crypto_invocations(); })
      .def_property_readonly("simulated", &PyStore::simulated);

  py::class_<PyDatabase>(m, "Database")
      .def(py::init<bool, std::size_t, std::size_t>(), py::arg("pad_sensitive") = true, py::arg("pad_width") = 128,
           py::arg("batch_size") = 256)
      .def("create_table", &PyDatabase::create_table, py::arg("name"), py::arg("columns"))
      .def("table", &PyDatabase::table)
      .def("begin", [](PyDatabase& d) { return d.sim().db().begin(); })
      .def("insert",
           [](PyDatabase& d, TxnId txn, const std::string& table, const py::list& values) {
             const auto t = d.table(table);
             return d.sim().db().insert_row(txn, t, d.params(t, values));
           })
      .def("update",
           [](PyDatabase& d, TxnId txn, const std::string& table, std::uint64_t row, const py::list& values) {
             const auto t = d.table(table);
             d.sim().db().update_row(txn, t, row, d.params(t, values));
           })
      .def("delete",
           [](PyDatabase& d, TxnId txn, const std::string& table, std::uint64_t row) {
             d.sim().db().delete_row(txn, d.table(table), row);
           })
      .def(
          "select",
          [](PyDatabase& d, TxnId txn, const std::string& table, std::uint64_t lo, std::uint64_t hi) {
            const auto t = d.table(table);
            return d.reveal_rows(txn, t, d.sim().db().scan(txn, t, lo, hi));
          },
          py::arg("txn"), py::arg("table"), py::arg("lo") = 0, py::arg("hi") = UINT64_MAX)
      .def("select_where",
           [](PyDatabase& d, TxnId txn, const std::string& table, std::size_t column, const std::string& cmp,
              std::int64_t constant) {
             const auto t = d.table(table);
             return d.reveal_rows(txn, t,
                                  d.sim().db().select_where(txn, t, column, parse_cmp(cmp), d.seal_int(constant)));
           })
      .def(
          "sum",
          [](PyDatabase& d, TxnId txn, const std::string& table, std::size_t column, std::optional<std::uint64_t> lo,
             std::optional<std::uint64_t> hi) {
            const auto t = d.table(table);
            const Fid f = (lo || hi) ? d.sim().db().sum_range(txn, t, column, lo.value_or(0), hi.value_or(UINT64_MAX))
                                     : d.sim().db().sum(txn, t, column);
            return d.reveal_int(txn, f);
          },
          py::arg("txn"), py::arg("table"), py::arg("column"), py::arg("lo") = py::none(),
          py::arg("hi") = py::none())
      .def("commit", [](PyDatabase& d, TxnId txn) { d.sim().db().commit(txn); })
      .def("abort", [](PyDatabase& d, TxnId txn) { d.sim().db().abort(txn); })
      .def("vacuum", [](PyDatabase& d) { return d.sim().db().vacuum_all(); })
      .def("orphan_gc", [](PyDatabase& d) { return d.sim().db().orphan_gc(); })
      .def(
          "crash",
          [](PyDatabase& d, const std::string& target) {
            d.sim().inject_crash(CrashPoint{CrashKind::BeforePrivacyFlush, parse_target(target), 1, 0});
          },
          py::arg("target") = "both")
      .def("recover", [](PyDatabase& d) { return from_json(to_json(d.sim().recover_all())); })
      .def("check_invariant", [](PyDatabase& d) { return invariant_dict(d.sim().check_invariant()); })
      .def("trace_events", [](PyDatabase& d) { return d.sim().trace().size(); })
      .def("round_trips", [](PyDatabase& d) { return d.sim().channel().counters().round_trips; });

  m.def(
      "run_workload",
      [](const std::string& mode, const std::string& dist, double theta, std::uint64_t ops, std::uint64_t rows,
         double cache_fraction, std::size_t batch, std::uint64_t seed, std::optional<std::string> crash) {
        const auto spec = make_spec(mode, dist, theta, ops, rows, cache_fraction, batch);
        std::optional<CrashPoint> point;
        if (crash) point = matrix_crash_point(parse_crash_kind(*crash), seed, spec);
        ZoneSim sim;
        py::gil_scoped_release release;
        const auto rep = sim.run_workload(seed, spec, point);
        py::gil_scoped_acquire acquire;
        return from_json(rep.to_json());
      },
      py::arg("mode") = "read-write", py::arg("distribution") = "uniform", py::arg("theta") = 0.8,
      py::arg("ops") = 10000, py::arg("rows") = 1000, py::arg("cache_fraction") = 0.25, py::arg("batch") = 256,
      py::arg("seed") = 1, py::arg("crash") = py::none());

  m.def(
      "bench_ops",
      [](std::uint64_t iters) {
        CostReport r;
        {
          py::gil_scoped_release release;
          r = bench_ops(iters);
        }
        py::dict d;
        d["iters"] = r.iters;
        d["put"] = op_stats(r.put);
        d["get"] = op_stats(r.get);
        d["encrypt"] = op_stats(r.encrypt);
        d["decrypt"] = op_stats(r.decrypt);
        d["decrypt_over_get"] = r.decrypt_over_get;
        d["encrypt_over_put"] = r.encrypt_over_put;
        return d;
      },
      py::arg("iters") = 100000);

  m.def(
      "bench_storage",
      [](std::uint64_t fields, std::uint64_t width) {
        const auto r = bench_storage(fields, width);
        py::dict d;
        d["fields"] = r.fields;
        d["width"] = r.width;
        d["cipher_bytes"] = r.cipher_bytes;
        d["fid_total_bytes"] = r.fid_total_bytes;
        d["fid_metadata_per_field"] = r.fid_metadata_per_field;
        d["aead_metadata_per_field"] = r.aead_metadata_per_field;
        d["metadata_reduction_pct"] = r.metadata_reduction_pct;
        return d;
      },
      py::arg("fields"), py::arg("width") = 4);

  py::list kinds;
  for (auto k : kAllCrashKinds) kinds.append(std::string(crash_kind_name(k)));
  m.attr("CRASH_POINTS") = kinds;
}
