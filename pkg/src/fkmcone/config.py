from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)


class Settings(BaseSettings):
    """Numerical tolerances and solver defaults.

    Values come from constructor arguments, then from an optional
    ``fkmcone.toml`` in the working directory. Environment variables are not
    consulted. Runtime code should always go through ``settings.<field>``
    (or a ``config`` argument derived from it with ``model_copy``).
    """

    # --- identity checks (foliation) ---
    IDENTITY_TOL: float = 1e-9
    C_TOL: float = 1e-10
    CZERO_TOL: float = 1e-12
    UNIT_TOL: float = 1e-12
    FD_TOL: float = 1e-5
    FD_STEP: float = 1e-5
    FD_DIRECTIONS: int = 8
    # minimal level: |H| and the two ||B||^2 routes against 3 (n - 1)
    MEAN_CURVATURE_TOL: float = 1e-8
    SECOND_FORM_TOL: float = 1e-6

    # --- frames ---
    FRAME_TOL: float = 1e-10
    # |F(x, y) - c| allowed for points handed to frame / radius operations
    LEVEL_TOL: float = 1e-10
    BETA_GRID: int = 256
    BETA_XTOL: float = 1e-10

    # --- Lawlor ODE ---
    ODE_RTOL: float = 1e-10
    ODE_ATOL: float = 1e-13
    ODE_T_START: float = 1e-4
    RADICAL_TOL: float = 1e-12
    # integration stops at t = tan(pi/2 - HORIZON_GAP)
    HORIZON_GAP: float = 1e-3
    # alpha grid of the tabulated dimension-12 angles
    TABLE_ALPHA_STEP: float = 0.1

    # --- geodesic re-intersection scan ---
    SCAN_POINTS: int = 10_000
    SCAN_THETA_MIN: float = 1e-4
    SCAN_RESIDUAL_TOL: float = 1e-6
    SCAN_XTOL: float = 1e-12

    LOG_LEVEL: str = "WARNING"

    model_config = SettingsConfigDict(toml_file="fkmcone.toml", extra="ignore")

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        # No environment variables: the CLI output must depend on argv only.
        return (init_settings, TomlConfigSettingsSource(settings_cls))

    def tolerances(self) -> dict[str, float]:
        """Return the numeric fields, for embedding in reports."""
        return {
            k: v
            for k, v in self.model_dump().items()
            if isinstance(v, (int, float)) and not isinstance(v, bool)
        }


settings = Settings()
