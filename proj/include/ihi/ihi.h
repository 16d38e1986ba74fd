#ifndef IHI_IHI_H
#define IHI_IHI_H

/* Interferometric hyperspectral imaging toolkit, C interface.
 *
 * Every call returns an ihi_status. On failure the message of the most recent
 * error on the calling thread is available from ihi_last_error(). Strings
 * returned through char** are heap allocated and released with
 * ihi_string_free(). Handles are released with their *_free function; passing
 * NULL to any *_free is a no-op. Options are JSON object strings; NULL or ""
 * selects the defaults. */

#include <stddef.h>
#include <stdint.h>

#if defined(IHI_BUILDING_LIBRARY)
#define IHI_API __attribute__((visibility("default")))
#else
#define IHI_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ihi_status {
  IHI_OK = 0,
  IHI_ERR_INVALID_ARGUMENT = 1,
  IHI_ERR_IO = 2,
  IHI_ERR_BAD_MAGIC = 3,
  IHI_ERR_VERSION_MISMATCH = 4,
  IHI_ERR_BAD_DTYPE = 5,
  IHI_ERR_BAD_NDIM = 6,
  IHI_ERR_DIM_OVERFLOW = 7,
  IHI_ERR_TRUNCATED_PAYLOAD = 8,
  IHI_ERR_TRAILING_BYTES = 9,
  IHI_ERR_NON_FINITE = 10,
  IHI_ERR_SHAPE_MISMATCH = 11,
  IHI_ERR_AXIS_MISMATCH = 12,
  IHI_ERR_DEGENERATE_AXIS = 13,
  IHI_ERR_RANK_DEFICIENT = 14,
  IHI_ERR_ILL_POSED = 15,
  IHI_ERR_BUDGET_EXCEEDED = 16,
  IHI_ERR_CACHE_MISSING = 17,
  IHI_ERR_PRIOR_FAILURE = 18,
  IHI_ERR_BRIDGE_TIMEOUT = 19,
  IHI_ERR_BRIDGE_SHAPE_MISMATCH = 20,
  IHI_ERR_BRIDGE_PROTOCOL = 21,
  IHI_ERR_NUMERICAL = 22,
  IHI_ERR_INTERNAL = 99
} ihi_status;

typedef enum ihi_axis { IHI_AXIS_WAVELENGTH = 0, IHI_AXIS_WAVENUMBER = 1, IHI_AXIS_OPD = 2 } ihi_axis;

typedef struct ihi_profile ihi_profile;
typedef struct ihi_cube ihi_cube;
typedef struct ihi_params ihi_params;
typedef struct ihi_reconstructor ihi_reconstructor;

/* ---- library ---- */
IHI_API const char* ihi_version(void);
IHI_API const char* ihi_last_error(void);
IHI_API const char* ihi_status_name(ihi_status status);
IHI_API void ihi_string_free(char* text);
IHI_API void ihi_set_threads(size_t count);
IHI_API size_t ihi_threads(void);
/* FNV-1a 64 hex digest of text, of a file, or of every file below a directory. */
IHI_API ihi_status ihi_digest_text(const char* text, char** out_hex);
IHI_API ihi_status ihi_digest_path(const char* path, char** out_hex);

/* ---- profiles ---- */
/* name: "standard" or "desk"; height 0 keeps the profile default. */
IHI_API ihi_status ihi_profile_create(const char* name, size_t height, ihi_profile** out);
IHI_API ihi_status ihi_profile_from_json(const char* json, ihi_profile** out);
IHI_API ihi_status ihi_profile_to_json(const ihi_profile* profile, char** out_json);
/* H, W, L (OPD samples), N (wavenumbers), bands, center index. */
IHI_API ihi_status ihi_profile_dims(const ihi_profile* profile, size_t* height, size_t* width,
                                    size_t* opd_samples, size_t* wavenumbers, size_t* bands,
                                    size_t* center);
IHI_API void ihi_profile_free(ihi_profile* profile);

/* ---- cubes: H x W x C, channel fastest ---- */
/* values may be NULL (zero filled); otherwise h*w*c doubles are copied. */
IHI_API ihi_status ihi_cube_create(size_t height, size_t width, size_t channels, ihi_axis axis,
                                   const char* profile_id, const double* values, ihi_cube** out);
IHI_API ihi_status ihi_cube_read(const char* path, ihi_cube** out);
/* Writes the payload and its JSON sidecar. */
IHI_API ihi_status ihi_cube_write(const ihi_cube* cube, const ihi_profile* profile,
                                  const char* path);
IHI_API ihi_status ihi_cube_shape(const ihi_cube* cube, size_t* height, size_t* width,
                                  size_t* channels, ihi_axis* axis);
/* Borrowed pointer valid until the cube is freed or modified. */
IHI_API const double* ihi_cube_data(const ihi_cube* cube);
IHI_API ihi_status ihi_cube_copy_data(const ihi_cube* cube, double* out, size_t count);
/* 32 or 64: payload precision used when writing. */
IHI_API ihi_status ihi_cube_set_storage_bits(ihi_cube* cube, int bits);
/* Profile recorded in the cube's sidecar, if it was read from a file. */
IHI_API ihi_status ihi_cube_profile(const ihi_cube* cube, ihi_profile** out);
/* Wavenumber cube to the profile's wavelength grid; wavelength cubes are copied. */
IHI_API ihi_status ihi_cube_to_wavelength(const ihi_cube* cube, const ihi_profile* profile,
                                          ihi_cube** out);
IHI_API void ihi_cube_free(ihi_cube* cube);

/* ---- degradation parameters ---- */
IHI_API ihi_status ihi_params_read(const char* dir, ihi_params** out);
IHI_API ihi_status ihi_params_write(const ihi_params* params, const char* dir);
/* Synthetic instrument. Options: seed, gain, dark, read_noise, e, phase_rad,
 * scan_distortion, background_margin. */
IHI_API ihi_status ihi_params_synthetic(const ihi_profile* profile, const char* options_json,
                                        ihi_params** out);
IHI_API ihi_status ihi_params_identity(const ihi_profile* profile, ihi_params** out);
IHI_API ihi_status ihi_params_profile(const ihi_params* params, ihi_profile** out);
IHI_API void ihi_params_free(ihi_params* params);

/* ---- pipeline ---- */
/* Wavelength HSI -> photometric scale -> wavenumber truth -> degraded
 * interferogram. Options: seed, stream, target_rate, mode
 * ("stochastic" | "deterministic"). Any of the cube outputs may be NULL.
 * record_json receives {"factor": ...}. */
IHI_API ihi_status ihi_simulate(const ihi_cube* hsi, const ihi_params* params,
                                const char* options_json, ihi_cube** interferogram,
                                ihi_cube** gt_nu, ihi_cube** gt_hsi, char** record_json);

/* Synthetic calibration captures (and the true parameters) for a profile.
 * Options: height, seed, instrument {..as ihi_params_synthetic..},
 * relative_rates [..], absolute_levels [..]. */
IHI_API ihi_status ihi_make_calibration(const ihi_profile* profile, const char* options_json,
                                        const char* capture_dir, const char* truth_params_dir);

/* Capture directory -> parameter directory. report_json may be NULL. */
IHI_API ihi_status ihi_calibrate(const char* capture_dir, double e, const char* params_dir,
                                 char** report_json);

/* Median relative errors of estimated against true parameters. */
IHI_API ihi_status ihi_compare_params(const ihi_params* estimate, const ihi_params* truth,
                                      char** out_json);

/* Synthetic wavelength scenes for dataset sources. Options: count, height,
 * width, seed, regions. */
IHI_API ihi_status ihi_make_scenes(const ihi_profile* profile, const char* options_json,
                                   const char* out_dir);

/* Options: patch_height, stride, per_image_cap, test_count, test_sources,
 * target_rate, master_seed, mode. */
IHI_API ihi_status ihi_make_dataset(const char* source_dir, const char* params_dir,
                                    const char* config_json, const char* out_dir,
                                    char** manifest_json);
/* JSON array of sample ids whose replay differs from the stored files. */
IHI_API ihi_status ihi_verify_dataset(const char* dataset_dir, char** mismatches_json);

/* Reusable reconstruction state (transform tables and inverse cache). */
IHI_API ihi_status ihi_reconstructor_create(const ihi_params* params, ihi_reconstructor** out);
/* Config: method ("fprime" | "traditional" | "unfold"), stages, alpha,
 * prior {...}, background ("none" | "dark" | "dark+background"), momentum.
 * Output is a wavelength cube. info_json (may be NULL) receives the
 * resolved config and, for unfold, the fidelity trace. */
IHI_API ihi_status ihi_reconstruct(ihi_reconstructor* rec, const ihi_cube* interferogram,
                                   const char* config_json, ihi_cube** out, char** info_json);
IHI_API void ihi_reconstructor_free(ihi_reconstructor* rec);

/* {"psnr_db": x | null, "psnr_infinite": b, "ssim": s}. Options: peak,
 * window, sigma, k1, k2. */
IHI_API ihi_status ihi_metrics(const ihi_cube* x, const ihi_cube* ref, const char* options_json,
                               char** out_json);

/* Config: method, split, error_dir, and the reconstruct keys for unfold.
 * table_text (may be NULL) receives a human-readable table. */
IHI_API ihi_status ihi_evaluate(const char* dataset_dir, const char* config_json,
                                char** report_json, char** table_text);

/* Options: height, seed. *passed is 1 when every check passed. */
IHI_API ihi_status ihi_selftest(const char* options_json, char** result_json, int* passed);

/* Reference prior server. mode: "echo" | "wrong-shape" | "bad-magic".
 * port < 0 serves stdin/stdout; otherwise listens on host:port (0 picks a
 * free port) and reports it through on_bound before accepting.
 * errors (may be NULL) receives the protocol error count. */
typedef void (*ihi_port_callback)(int port, void* user);
IHI_API ihi_status ihi_serve_prior(const char* mode, const char* host, int port,
                                   size_t max_connections, ihi_port_callback on_bound, void* user,
                                   size_t* errors);

#ifdef __cplusplus
}
#endif

#endif /* IHI_IHI_H */
