from tempgnn.config.settings import RunConfig, RunConfigDTO, config_keys, load_run_config, read_config_file, \
    write_config_file

__all__ = ["RunConfig", "RunConfigDTO", "config_keys", "load_run_config", "read_config_file", "write_config_file"]
